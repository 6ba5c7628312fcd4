"""
CSV reports of the benchmark studies.

Numbers are written in fixed-precision scientific notation so that reruns
with identical inputs produce byte-identical files. Every row ends with the
configuration hash. Files are written atomically through a temporary file.
"""

import csv
import io
import logging
import os
from typing import Iterable, List, Sequence

import numpy as np

from .expectation import PosteriorSummary
from .gpc_series import SparseSeries
from .models import Mesh1D
from .posterior_density import PosteriorApprox

logger = logging.getLogger(__name__)


class CsvReportWriter:
    """
    Writer for the CSV reports of the benchmark CLI.

    This class formats table rows with a configurable number of significant
    digits and stamps each row with the configuration hash.
    """

    def __init__(self, config_hash: str, precision: int = 10):
        """
        Initialize the report writer.

        Args:
            config_hash: Provenance hash appended to every row
            precision: Digits after the decimal point in scientific notation

        Raises:
            ValueError: If precision is negative
        """
        if precision < 0:
            raise ValueError(f"Precision cannot be negative, got {precision}")
        self.config_hash = config_hash
        self.precision = precision

    def format_cell(self, value: object) -> str:
        """Format a single cell: floats in scientific notation, the rest as text."""
        if isinstance(value, (bool, np.bool_)):
            return "true" if value else "false"
        if isinstance(value, (int, np.integer)):
            return str(int(value))
        if isinstance(value, (float, np.floating)):
            value = float(value)
            if np.isnan(value):
                return "nan"
            if np.isinf(value):
                return "inf" if value > 0 else "-inf"
            return f"{value:.{self.precision}e}"
        if value is None:
            return ""
        return str(value)

    def format_table(self, header: Sequence[str], rows: Iterable[Sequence[object]]) -> str:
        """
        Format a table as CSV text with the config_hash column appended.

        Raises:
            ValueError: If a row does not match the header length
        """
        buffer = io.StringIO()
        writer = csv.writer(buffer, lineterminator="\n")
        writer.writerow(list(header) + ["config_hash"])
        for i, row in enumerate(rows):
            row = list(row)
            if len(row) != len(header):
                raise ValueError(f"row {i} has {len(row)} cells, expected {len(header)}")
            writer.writerow([self.format_cell(v) for v in row] + [self.config_hash])
        return buffer.getvalue()

    def write_table(self, filepath: str, header: Sequence[str],
                    rows: Iterable[Sequence[object]]) -> None:
        """
        Write a table to a CSV file atomically.

        The content goes to a temporary file first and is renamed over the
        target, so an interrupted run never leaves a truncated report.

        Raises:
            IOError: If the file cannot be written
            PermissionError: If lacking write permissions
        """
        content = self.format_table(header, rows)
        temp_filepath = filepath + ".tmp"
        directory = os.path.dirname(filepath)
        try:
            if directory and not os.path.exists(directory):
                try:
                    os.makedirs(directory, exist_ok=True)
                except OSError as e:
                    raise IOError(
                        f"Cannot create directory for output file: {directory}\n"
                        f"Error: {str(e)}"
                    )
            try:
                with open(temp_filepath, "w", encoding="utf-8", newline="") as f:
                    f.write(content)
            except PermissionError:
                raise PermissionError(
                    f"Permission denied: Cannot write to {filepath}\n"
                    f"Please check file permissions and try again."
                )
            os.replace(temp_filepath, filepath)
        except Exception:
            if os.path.exists(temp_filepath):
                try:
                    os.remove(temp_filepath)
                except OSError:
                    pass
            raise
        logger.info("wrote %s", filepath)

    def write_coefficients(self, filepath: str, series: SparseSeries) -> None:
        """Coefficient norms sorted descending (ties canonical), for decay plots."""
        items = series.items()
        norms = series.norms()
        order = np.argsort(-norms, kind="stable")
        rows = [(items[i][0].to_string(), items[i][0].degree, norms[i]) for i in order]
        self.write_table(filepath, ("index", "degree", "norm"), rows)

    def write_theta_terms(self, filepath: str, pa: PosteriorApprox) -> None:
        """Terms of Theta_N in canonical order."""
        rows = [(pa.n_budget, nu.to_string(), nu.degree, c) for nu, c in pa.theta_series.items()]
        self.write_table(filepath, ("N", "index", "degree", "coefficient"), rows)

    def write_diagnostics(self, filepath: str, approximations: Sequence[PosteriorApprox]) -> None:
        """One row per truncation stage and budget."""
        rows: List[Sequence[object]] = []
        for pa in approximations:
            for d in pa.diagnostics:
                rows.append((pa.n_budget, pa.k_terms, d.stage, d.dropped_mass, d.support_size,
                             d.error_bound))
            rows.append((pa.n_budget, pa.k_terms, "remainder", pa.remainder_bound,
                         pa.support_size, pa.total_error_bound))
        self.write_table(filepath, ("N", "K_N", "stage", "dropped_mass", "support_size",
                                    "error_bound"), rows)

    def write_summaries(self, filepath: str, mesh: Mesh1D,
                        summaries: Sequence[PosteriorSummary]) -> None:
        """Estimator tag, Z, nodewise mean and variance of each summary."""
        x = mesh.nodes[1:-1]
        rows: List[Sequence[object]] = []
        for summary in summaries:
            for node, (xi, mean, var) in enumerate(zip(x, summary.mean_field, summary.variance)):
                rows.append((summary.estimator.value, summary.work_units, summary.z, node + 1,
                             xi, mean, var))
        self.write_table(filepath, ("estimator", "work_units", "z", "node", "x", "mean",
                                    "variance"), rows)
