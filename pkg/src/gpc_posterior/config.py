"""
Benchmark configuration: the BenchConfig dataclass and its text format.

Configuration files are flat "key = value" lines; "#" starts a comment and
list values are comma separated:

    n_dims = 4
    decay_b = 2.0
    n_list = 8, 16, 32, 64, 128

Command-line overrides use the same "key=value" syntax.
"""

import dataclasses
import hashlib
import logging
from dataclasses import dataclass
from typing import Dict, Iterable, List, Optional, Tuple

from .errors import ConfigError, ConfigParseError

logger = logging.getLogger(__name__)

# fields that do not influence any computed number
_HASH_EXCLUDED = ("out_dir", "workers")


@dataclass(frozen=True)
class BenchConfig:
    """
    Parameters of a benchmark problem and of the studies run on it.

    Attributes:
        n_dims: Number J of parameters
        decay_b: Decay exponent b of the fluctuations
        kappa: Ellipticity margin in (0, 1)
        abar: Constant mean coefficient
        source: Constant source term f
        mesh_elems: Number of finite elements
        n_obs: Number K of observation windows
        gamma: Noise variance of every observation
        truth_seed: Seed of the ground-truth parameter draw
        noise_seed: Seed of the observation noise
        mc_seed: Base seed of the Monte Carlo estimators
        n_list: Strictly increasing truncation budgets N
        m_list: Strictly increasing Monte Carlo sample counts M
        mc_replicates: Replicates averaged per M in the cost study
        mc_reference_samples: Samples of the Monte Carlo reference (J > 6)
        density_samples: Prior samples used for density error estimates
        quad_nodes: Gauss-Legendre nodes per dimension of the oracle
        c_k: Constant in K(N) = max(1, ceil(c_k ln N))
        candidate_degree: Weighted total degree of the candidate forward set
        max_candidates: Cardinality cap of the candidate forward set
        j_sweep: Strictly increasing dimensions of the truncation study
        workers: Worker processes for independent runs
        record_wall_time: Write measured wall times (breaks byte-identical reruns)
        out_dir: Output directory for CSV reports
    """
    n_dims: int = 4
    decay_b: float = 2.0
    kappa: float = 0.5
    abar: float = 1.0
    source: float = 1.0
    mesh_elems: int = 64
    n_obs: int = 3
    gamma: float = 1e-2
    truth_seed: int = 1
    noise_seed: int = 2
    mc_seed: int = 3
    n_list: Tuple[int, ...] = (8, 16, 32, 64, 128)
    m_list: Tuple[int, ...] = (100, 400, 1600, 6400)
    mc_replicates: int = 10
    mc_reference_samples: int = 100_000
    density_samples: int = 10_000
    quad_nodes: int = 12
    c_k: float = 2.0
    candidate_degree: float = 12.0
    max_candidates: int = 20_000
    j_sweep: Tuple[int, ...] = (1, 2, 3, 4, 6, 8)
    workers: int = 1
    record_wall_time: bool = False
    out_dir: str = "results"

    def __post_init__(self):
        """
        Validate configuration values.

        Raises:
            ConfigError: If a value is out of range
        """
        for name in ("n_dims", "n_obs", "mc_replicates", "mc_reference_samples",
                     "density_samples", "max_candidates", "workers"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be at least 1, got {getattr(self, name)}")
        if self.mesh_elems < 2:
            raise ConfigError(f"mesh_elems must be at least 2, got {self.mesh_elems}")
        if self.quad_nodes < 2:
            raise ConfigError(f"quad_nodes must be at least 2, got {self.quad_nodes}")
        for name in ("decay_b", "abar", "gamma", "c_k", "candidate_degree"):
            if not getattr(self, name) > 0:
                raise ConfigError(f"{name} must be positive, got {getattr(self, name)}")
        if not 0.0 < self.kappa < 1.0:
            raise ConfigError(f"kappa must lie in (0, 1), got {self.kappa}")
        for name in ("truth_seed", "noise_seed", "mc_seed"):
            if getattr(self, name) < 0:
                raise ConfigError(f"{name} must be non-negative, got {getattr(self, name)}")
        for name in ("n_list", "m_list", "j_sweep"):
            values = getattr(self, name)
            if not values:
                raise ConfigError(f"{name} must not be empty")
            if values[0] < 1:
                raise ConfigError(f"{name} entries must be positive, got {list(values)}")
            if any(b <= a for a, b in zip(values, values[1:])):
                raise ConfigError(f"{name} must be strictly increasing, got {list(values)}")
        if self.n_list[-1] > self.max_candidates:
            raise ConfigError(
                f"largest N = {self.n_list[-1]} exceeds max_candidates = {self.max_candidates}"
            )

    def with_seed(self, seed: int) -> "BenchConfig":
        """Derive truth, noise and Monte Carlo seeds from a single seed."""
        return dataclasses.replace(self, truth_seed=seed, noise_seed=seed + 1, mc_seed=seed + 2)

    def canonical_lines(self) -> List[str]:
        """Sorted key=value lines of every field that influences results."""
        lines = []
        for f in sorted(dataclasses.fields(self), key=lambda f: f.name):
            if f.name in _HASH_EXCLUDED:
                continue
            lines.append(f"{f.name}={format_value(getattr(self, f.name))}")
        return lines


def format_value(value: object) -> str:
    """Canonical text form of a configuration value."""
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, tuple):
        return ",".join(format_value(v) for v in value)
    if isinstance(value, float):
        return repr(value)
    return str(value)


def config_hash(config: BenchConfig) -> str:
    """First 12 hex digits of the SHA-256 of the canonical dump."""
    dump = "\n".join(config.canonical_lines()).encode("utf-8")
    return hashlib.sha256(dump).hexdigest()[:12]


class ConfigParser:
    """
    Parser for flat key=value configuration text.

    Values are converted to the type of the matching BenchConfig field;
    unknown keys and malformed values are reported with their line number.
    """

    FIELD_TYPES = {f.name: f.type for f in dataclasses.fields(BenchConfig)}
    TRUE_WORDS = ("true", "yes", "on", "1")
    FALSE_WORDS = ("false", "no", "off", "0")

    def parse_file(self, filepath: str) -> Dict[str, object]:
        """
        Parse a configuration file.

        Args:
            filepath: Path to the file

        Returns:
            Mapping of field names to converted values

        Raises:
            FileNotFoundError: If the file doesn't exist
            ConfigParseError: If the file cannot be read or decoded, or a line is malformed
        """
        try:
            with open(filepath, "r", encoding="utf-8") as f:
                content = f.read()
        except FileNotFoundError:
            raise FileNotFoundError(
                f"Config file not found: {filepath}\n"
                f"Please check that the file exists and the path is correct."
            )
        except UnicodeDecodeError as e:
            raise ConfigParseError(f"Config file is not valid UTF-8: {filepath} ({e.reason})")
        except OSError as e:
            raise ConfigParseError(f"Cannot read config file: {filepath} ({e.strerror or e})")
        return self.parse_text(content)

    def parse_text(self, content: str) -> Dict[str, object]:
        """Parse configuration text; see parse_file."""
        values: Dict[str, object] = {}
        for line_number, raw in enumerate(content.splitlines(), start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            key, value = self.parse_assignment(line, line_number, raw)
            if key in values:
                raise ConfigParseError(f"duplicate key '{key}'", line_number, raw)
            values[key] = value
        return values

    def parse_assignment(self, line: str, line_number: Optional[int] = None,
                         raw: Optional[str] = None) -> Tuple[str, object]:
        """
        Parse one "key = value" assignment.

        Raises:
            ConfigParseError: On a missing '=', an unknown key or a bad value
        """
        raw = raw if raw is not None else line
        key, sep, text = line.partition("=")
        key = key.strip()
        if not sep:
            raise ConfigParseError("expected 'key = value'", line_number, raw)
        if key not in self.FIELD_TYPES:
            raise ConfigParseError(f"unknown key '{key}'", line_number, raw)
        try:
            return key, self.convert(self.FIELD_TYPES[key], text.strip())
        except ValueError as e:
            raise ConfigParseError(f"invalid value for '{key}': {e}", line_number, raw)

    def convert(self, field_type: object, text: str) -> object:
        """Convert text to a field's type (int, float, bool, str or tuple of int)."""
        if field_type is bool:
            lowered = text.lower()
            if lowered in self.TRUE_WORDS:
                return True
            if lowered in self.FALSE_WORDS:
                return False
            raise ValueError(f"expected a boolean, got {text!r}")
        if field_type is int:
            return int(text)
        if field_type is float:
            return float(text)
        if field_type is str:
            if not text:
                raise ValueError("expected a non-empty string")
            return text
        # the remaining field type is Tuple[int, ...]
        return tuple(int(part) for part in text.split(",") if part.strip())


def load_config(path: Optional[str] = None, overrides: Iterable[str] = ()) -> BenchConfig:
    """
    Build a BenchConfig from defaults, an optional file and overrides.

    Args:
        path: Configuration file, or None for the defaults
        overrides: "key=value" strings applied after the file

    Raises:
        ConfigParseError: If the file or an override is malformed
        ConfigError: If the resulting values are invalid
    """
    parser = ConfigParser()
    values = parser.parse_file(path) if path else {}
    for override in overrides:
        key, value = parser.parse_assignment(override)
        values[key] = value
    config = BenchConfig(**values)
    logger.debug("loaded config %s (hash %s)", path or "<defaults>", config_hash(config))
    return config
