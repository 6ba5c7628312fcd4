"""
Exception hierarchy for the gpc posterior library.

Every failure raised by the library derives from GpcPosteriorError so that
callers (the benchmark CLI in particular) can separate numeric failures from
usage mistakes. Exceptions keep their context as attributes and format a
readable message from it.
"""

from typing import Optional, Tuple


class GpcPosteriorError(Exception):
    """Base class for all library errors."""


class ConfigParseError(GpcPosteriorError):
    """Exception raised when a configuration file cannot be parsed."""

    def __init__(self, message: str, line_number: Optional[int] = None,
                 line_text: Optional[str] = None):
        """
        Initialize config parse error.

        Args:
            message: Human-readable error description
            line_number: Line number where the error occurred (if parsing a file)
            line_text: The problematic line
        """
        self.message = message
        self.line_number = line_number
        self.line_text = line_text

        error_msg = message
        if line_number is not None:
            error_msg = f"Line {line_number}: {message}"
        if line_text:
            truncated = line_text[:100] + "..." if len(line_text) > 100 else line_text
            error_msg += f"\nProblematic line: {truncated}"

        super().__init__(error_msg)


class ConfigError(GpcPosteriorError, ValueError):
    """A configuration value is well-formed but not acceptable."""


class DimensionMismatchError(GpcPosteriorError, ValueError):
    """Two objects that must agree in size do not."""

    def __init__(self, what: str, expected: int, actual: int):
        self.what = what
        self.expected = expected
        self.actual = actual
        super().__init__(f"{what}: expected {expected}, got {actual}")


class ParameterRangeError(GpcPosteriorError, ValueError):
    """A parameter coordinate lies outside the box [-1, 1]."""

    def __init__(self, index: int, value: float):
        self.index = index
        self.value = value
        super().__init__(
            f"parameter y_{index + 1} = {value!r} lies outside [-1, 1]"
        )


class UEAViolationError(GpcPosteriorError):
    """The diffusion coefficient is not uniformly elliptic on the parameter box."""

    def __init__(self, element_index: int, lower_bound: float):
        self.element_index = element_index
        self.lower_bound = lower_bound
        super().__init__(
            f"uniform ellipticity violated on element {element_index}: "
            f"abar - sum |psi_j| = {lower_bound:.6g} <= 0"
        )


class FactorizationError(GpcPosteriorError):
    """Cholesky factorization of the parametric stiffness matrix failed."""

    def __init__(self, reason: str):
        self.reason = reason
        super().__init__(
            f"stiffness matrix is not positive definite ({reason}); "
            f"the coefficient violates uniform ellipticity"
        )


class ObservationWindowError(GpcPosteriorError, ValueError):
    """An observation window is empty or leaves the domain (0, 1)."""

    def __init__(self, window_index: int, window: Tuple[float, float]):
        self.window_index = window_index
        self.window = window
        super().__init__(
            f"observation window {window_index} = {window} must satisfy "
            f"0 <= lo < hi <= 1"
        )


class NonMonotoneSetError(GpcPosteriorError, ValueError):
    """An index set is not downward closed."""

    def __init__(self, missing: object, context: str = "index set"):
        self.missing = missing
        super().__init__(f"{context} is not monotone: missing {missing}")


class IndexSetSizeError(GpcPosteriorError):
    """A generated index set would exceed the configured cardinality cap."""

    def __init__(self, cap: int):
        self.cap = cap
        super().__init__(f"index set cardinality exceeds cap of {cap}")


class BasisError(GpcPosteriorError, ValueError):
    """A series is expressed in the wrong polynomial basis for the operation."""

    def __init__(self, expected: str, actual: str):
        self.expected = expected
        self.actual = actual
        super().__init__(f"expected a {expected} series, got {actual}")


class RateFitError(GpcPosteriorError, ValueError):
    """Input to a log-log rate fit is degenerate."""


class NormalizationError(GpcPosteriorError):
    """The semianalytic normalization constant lost positivity."""

    def __init__(self, z: float):
        self.z = z
        super().__init__(
            f"normalization constant Z = {z:.6g} <= 0; the truncation budget "
            f"is too aggressive for this data"
        )


class CostGuardError(GpcPosteriorError):
    """A brute-force reference computation would be too expensive."""

    def __init__(self, n_dims: int, limit: int):
        self.n_dims = n_dims
        self.limit = limit
        super().__init__(
            f"tensor quadrature over {n_dims} dimensions exceeds the limit "
            f"of {limit}"
        )
