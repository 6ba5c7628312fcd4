"""
Command-line driver for the benchmark studies.

    gpc-bench forward [--self-check]
    gpc-bench converge [--sweep-J]
    gpc-bench cost-compare

Every subcommand accepts --config, --out, --seed, --set key=value,
--workers and --verbose. Exit codes: 0 success, 1 numeric or I/O failure,
2 usage or configuration error.
"""

import argparse
import dataclasses
import logging
import os
import sys
from typing import List, Optional

import numpy as np
from numpy.linalg import LinAlgError

from .config import BenchConfig, config_hash, load_config
from .errors import ConfigError, ConfigParseError, GpcPosteriorError
from .forward_fem import observe, solve_at
from .report_writer import CsvReportWriter
from .studies import (
    SELF_CHECK_MESHES,
    build_benchmark,
    convergence_study,
    cost_study,
    fem_self_check,
    truncation_dimension_study,
)

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_FAILURE = 1
EXIT_USAGE = 2

SELF_CHECK_RANGE = (1.8, 2.2)


def _writer(config: BenchConfig) -> CsvReportWriter:
    return CsvReportWriter(config_hash(config))


def _path(config: BenchConfig, name: str) -> str:
    return os.path.join(config.out_dir, name)


def cmd_forward(config: BenchConfig, self_check: bool = False) -> int:
    """Solve at y = 0 and at the ground truth; optionally verify FE h^2 convergence."""
    bench = build_benchmark(config)
    writer = _writer(config)
    y_zero = np.zeros(bench.model.n_dims)
    p_zero = solve_at(bench.fam, y_zero)
    p_truth = solve_at(bench.fam, bench.setup.y_truth)

    nodes = bench.mesh.nodes[1:-1]
    writer.write_table(
        _path(config, "solution.csv"),
        ("node", "x", "p_y0", "p_truth"),
        [(i + 1, x, a, b) for i, (x, a, b) in enumerate(zip(nodes, p_zero, p_truth))],
    )
    g_zero = observe(bench.setup, p_zero, bench.mesh)
    g_truth = observe(bench.setup, p_truth, bench.mesh)
    writer.write_table(
        _path(config, "observations.csv"),
        ("k", "lo", "hi", "g_y0", "g_truth", "delta", "gamma"),
        [(k + 1, lo, hi, g_zero[k], g_truth[k], bench.setup.delta[k], bench.setup.gamma[k])
         for k, (lo, hi) in enumerate(bench.setup.windows)],
    )

    if self_check:
        points, order = fem_self_check(SELF_CHECK_MESHES)
        writer.write_table(
            _path(config, "self_check.csv"),
            ("n_elems", "h", "max_error"),
            [(n, 1.0 / n, err) for n, err in points],
        )
        print(f"FE self-check: order in h = {order:.4f}")
        lo, hi = SELF_CHECK_RANGE
        if not lo <= order <= hi:
            logger.error("FE self-check order %.4f outside [%.1f, %.1f]", order, lo, hi)
            return EXIT_FAILURE
    return EXIT_OK


def cmd_converge(config: BenchConfig, sweep_j: bool = False) -> int:
    """Convergence of the surrogate posterior in N, optionally with the J sweep."""
    bench = build_benchmark(config)
    result = convergence_study(bench, workers=config.workers)
    writer = _writer(config)

    writer.write_table(
        _path(config, "rates.csv"),
        ("N", "K_N", "support_theta", "err_Z", "err_mean_L2", "dropped_mass", "wall_time"),
        [(lv.n_budget, lv.approx.k_terms, lv.approx.support_size, lv.err_z, lv.err_mean,
          lv.approx.total_dropped_mass, lv.wall_time) for lv in result.levels],
    )
    writer.write_table(
        _path(config, "density_errors.csv"),
        ("N", "err_theta_L1", "err_theta_sup", "hellinger"),
        [(lv.n_budget, lv.err_theta_l1, lv.err_theta_sup, lv.hellinger) for lv in result.levels],
    )
    writer.write_table(
        _path(config, "forward_tail.csv"),
        ("N", "taylor_l1_tail", "legendre_l2_tail"),
        result.forward_tail,
    )
    writer.write_coefficients(_path(config, "forward_coefficients.csv"), result.candidates)
    writer.write_theta_terms(_path(config, "theta_terms.csv"), result.levels[-1].approx)
    writer.write_diagnostics(_path(config, "theta_diagnostics.csv"),
                             [lv.approx for lv in result.levels])
    summaries = [result.reference] + [lv.summary for lv in result.levels[-1:] if lv.summary is not None]
    writer.write_summaries(_path(config, "posterior_summary.csv"), bench.mesh, summaries)

    for name, slope in result.slopes.items():
        print(f"slope {name}: {slope:.4f}")

    if sweep_j:
        rows = truncation_dimension_study(config, workers=config.workers)
        writer.write_table(
            _path(config, "sweep_j.csv"),
            ("J", "truncation_tail", "forward_size", "err_Z", "err_mean_L2"),
            [(r.n_dims, r.truncation_tail, r.forward_size, r.err_z, r.err_mean) for r in rows],
        )
    return EXIT_OK


def cmd_cost_compare(config: BenchConfig) -> int:
    """Error per work unit of Monte Carlo against the surrogate."""
    bench = build_benchmark(config)
    result = cost_study(bench, workers=config.workers)
    writer = _writer(config)
    writer.write_table(
        _path(config, "cost.csv"),
        ("method", "parameter", "work_units", "error"),
        [(r.method, r.parameter, r.work_units, r.error) for r in result.rows],
    )
    writer.write_table(
        _path(config, "cost_fit.csv"),
        ("method", "slope", "crossover_work"),
        [("mc", result.mc_slope, result.crossover_work),
         ("gpc", result.gpc_slope, result.crossover_work)],
    )
    print(f"slope mc: {result.mc_slope:.4f}")
    print(f"slope gpc: {result.gpc_slope:.4f}")
    if result.crossover_work is None:
        print("crossover: none")
    else:
        print(f"crossover work units: {result.crossover_work:.1f}")
    return EXIT_OK


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", metavar="PATH", help="Configuration file (key = value lines).")
    common.add_argument("--out", metavar="DIR", help="Output directory for CSV reports.")
    common.add_argument("--seed", type=int, help="Derive truth, noise and Monte Carlo seeds from one seed.")
    common.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                        help="Override a configuration value (repeatable).")
    common.add_argument("--workers", type=int, help="Worker processes for independent runs.")
    common.add_argument("--verbose", "-v", action="store_true", help="Log debug detail.")

    parser = argparse.ArgumentParser(
        prog="gpc-bench",
        description="Sparse polynomial surrogates of a Bayesian elliptic inverse problem.",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    forward = sub.add_parser("forward", parents=[common], help="Forward solves and FE self-check.")
    forward.add_argument("--self-check", action="store_true", help="Verify h^2 convergence of the FE solver.")
    converge = sub.add_parser("converge", parents=[common], help="Convergence of the surrogate in N.")
    converge.add_argument("--sweep-J", dest="sweep_j", action="store_true",
                          help="Also vary the number of prior dimensions J.")
    sub.add_parser("cost-compare", parents=[common], help="Monte Carlo versus surrogate cost.")
    return parser


def resolve_config(args: argparse.Namespace) -> BenchConfig:
    """Defaults, then the config file, then --set, --seed, --out and --workers."""
    config = load_config(args.config, args.overrides)
    if args.seed is not None:
        config = config.with_seed(args.seed)
    if args.out is not None:
        config = dataclasses.replace(config, out_dir=args.out)
    if args.workers is not None:
        config = dataclasses.replace(config, workers=args.workers)
    return config


def main(argv: Optional[List[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )

    try:
        config = resolve_config(args)
    except (ConfigParseError, ConfigError, FileNotFoundError) as e:
        print(f"gpc-bench: configuration error: {e}", file=sys.stderr)
        return EXIT_USAGE

    logger.info("config hash %s, output %s", config_hash(config), config.out_dir)
    try:
        if args.command == "forward":
            return cmd_forward(config, self_check=args.self_check)
        if args.command == "converge":
            return cmd_converge(config, sweep_j=args.sweep_j)
        return cmd_cost_compare(config)
    except (GpcPosteriorError, LinAlgError, OSError) as e:
        print(f"gpc-bench: {args.command} failed: {e}", file=sys.stderr)
        return EXIT_FAILURE


if __name__ == "__main__":
    sys.exit(main())
