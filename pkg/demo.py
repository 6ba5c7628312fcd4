#!/usr/bin/env python3
"""
gpc posterior - Demo Script

Walks through the pipeline on a small benchmark:
- Building the prior and the FE operator family
- Synthesizing data from a seeded ground truth
- Taylor gpc of the forward map on a monotone index set
- The N-term posterior density surrogate
- Semianalytic posterior moments against the quadrature reference
"""

import sys

import numpy as np

from gpc_posterior import BenchConfig, GpcPosteriorError, posterior_summary_semianalytic
from gpc_posterior.expectation import relative_l2_error
from gpc_posterior.posterior_density import observe_series, theta_series
from gpc_posterior.studies import (
    build_benchmark,
    forward_candidates,
    reference_summary,
    select_forward_set,
)


def main():
    """Run the gpc posterior demo."""
    n_dims = int(sys.argv[1]) if len(sys.argv) > 1 else 2
    budgets = [int(arg) for arg in sys.argv[2:]] or [8, 16, 32, 64]

    print("=" * 70)
    print("SPARSE GPC POSTERIOR - DEMO")
    print("=" * 70)
    print()

    # Step 1: Benchmark problem
    print(f"[1/4] Building benchmark with J={n_dims}...")
    try:
        config = BenchConfig(n_dims=n_dims, mesh_elems=32, n_list=tuple(budgets))
        bench = build_benchmark(config)
    except (GpcPosteriorError, ValueError) as e:
        print(f"Error building benchmark: {e}")
        return 1
    print(f"  - Mesh elements: {bench.mesh.n_elems}")
    print(f"  - Observations: {len(bench.setup.delta)} window averages, gamma={config.gamma}")
    print(f"  - Ground truth y: {np.round(bench.setup.y_truth, 4)}")
    print()

    # Step 2: Reference posterior
    print("[2/4] Computing reference posterior...")
    reference = reference_summary(bench)
    print(f"  - Estimator: {reference.estimator.value}, Z = {reference.z:.8f}")
    print()

    # Step 3: Forward gpc
    print("[3/4] Taylor gpc of the forward map...")
    candidates = forward_candidates(bench.fam, bench.model, config)
    observations = observe_series(bench.setup, candidates, bench.mesh)
    print(f"  - Candidate indices: {len(candidates)}")
    print()

    # Step 4: Surrogate posterior per budget
    print("[4/4] N-term posterior surrogates...")
    print("-" * 70)
    print(f"{'N':>6} {'|Lambda|':>9} {'K':>3} {'|Theta|':>8} {'err Z':>12} {'err mean':>12}")
    for n_budget in budgets:
        lam = select_forward_set(candidates, n_budget)
        approx = theta_series(observations.restrict(lam), bench.setup, n_budget, config.c_k)
        try:
            summary = posterior_summary_semianalytic(approx, candidates.restrict(lam), n_budget)
        except GpcPosteriorError as e:
            print(f"{n_budget:>6} {len(lam):>9} {approx.k_terms:>3} {approx.support_size:>8}  {e}")
            continue
        err_z = abs(summary.z - reference.z) / reference.z
        err_mean = relative_l2_error(bench.mesh, summary.mean_field, reference.mean_field)
        print(f"{n_budget:>6} {len(lam):>9} {approx.k_terms:>3} {approx.support_size:>8} "
              f"{err_z:>12.3e} {err_mean:>12.3e}")

    print()
    print("=" * 70)
    print("Usage: python demo.py [J] [N ...]")
    print("Example: python demo.py 4 8 16 32 64 128")
    print("Full studies: gpc-bench converge --config configs/benchmark_j4.cfg")
    print()
    return 0


if __name__ == "__main__":
    sys.exit(main())
