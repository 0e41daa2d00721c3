#!/usr/bin/env python3
"""Run the convex, concave and classical benchmarks and print a summary.

Usage:
    python scripts/run_benchmarks.py [--paths N] [--seed S]
"""

import argparse
import logging
import math

from rich.console import Console
from rich.table import Table

from src.uncertain_clt.core.dp_solver import dp_solve
from src.uncertain_clt.core.experiments import benchmark, reference_pde_config, run_convergence
from src.uncertain_clt.core.models import SimConfig, StrategyKind
from src.uncertain_clt.core.simulator import simulate

EXPECTED = {"convex": 4.0, "concave": -1.0, "classical": math.exp(-0.5)}
HALF_WIDTH = {"convex": 12.0, "concave": 12.0, "classical": 6.0}
N_LIST = [8, 32, 128, 512]


def main() -> None:
    """Solve each benchmark both ways and check the feedback policy by simulation."""
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--paths", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=20240101)
    args = parser.parse_args()
    logging.basicConfig(level=logging.WARNING)

    table = Table(title="benchmarks")
    for column in ("problem", "expected", "pde", "dp (n=512)", "feedback MC", "stderr"):
        table.add_column(column, justify="right")

    for name, expected in EXPECTED.items():
        spec = benchmark(name)
        radius = HALF_WIDTH[name]
        report = run_convergence(
            spec, N_LIST, half_width=radius, pde_config=reference_pde_config(spec, radius, 0.05)
        )
        policy = dp_solve(spec, N_LIST[-1], keep_slices=False).policy
        estimate = simulate(
            spec,
            SimConfig(paths=args.paths, seed=args.seed, n=N_LIST[-1], strategy=StrategyKind.FEEDBACK, policy=policy),
        )
        table.add_row(
            name,
            f"{expected:.6f}",
            f"{report.pde_value:.6f}",
            f"{report.rows[-1].dp_value:.6f}",
            f"{estimate.mean:.6f}",
            f"{estimate.stderr:.2g}",
        )

    Console().print(table)


if __name__ == "__main__":
    main()
