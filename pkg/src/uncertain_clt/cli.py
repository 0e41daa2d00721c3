"""Command-line front end.

Subcommands: converge, invariance, noise-study, g-eval, solve-dp, solve-pde,
simulate, euler, consistency, oracle, results. Results print as tables; with
``--out DIR`` they are also written as JSON reports and CSV tables.

Exit codes: 0 on success, 1 on a domain error or a failed built-in check,
2 on usage or configuration errors.
"""

import argparse
import logging
import math
import sys
from collections.abc import Callable, Sequence

import numpy as np
import pandas as pd
from pydantic import BaseModel
from rich.console import Console
from rich.table import Table

from src.uncertain_clt import __version__
from src.uncertain_clt.core import consistency
from src.uncertain_clt.core.dp_solver import dp_solve
from src.uncertain_clt.core.errors import CheckFailedError, ConfigError, UncertainCLTError
from src.uncertain_clt.core.experiments import (
    dp_grid,
    reference_pde_config,
    rotation,
    run_convergence,
    run_invariance,
    run_noise_study,
)
from src.uncertain_clt.core.g_operator import candidate_values
from src.uncertain_clt.core.models import (
    GEvalReport,
    NoiseModel,
    PdeConfig,
    SimConfig,
    SimulationReport,
    SolveReport,
    StrategyKind,
)
from src.uncertain_clt.core.oracle import compare_with_dp
from src.uncertain_clt.core.pde_solver import pde_solve
from src.uncertain_clt.core.simulator import euler_compare, policy_for, simulate
from src.uncertain_clt.infra.config_loader import ProblemFile, load_problem
from src.uncertain_clt.infra.storage_files import FileResultStorage
from src.uncertain_clt.utils.seed import get_or_generate_seed

logger = logging.getLogger(__name__)

DEFAULT_N_LIST = [8, 32, 128, 512]
DEFAULT_NOISES = ["rademacher", "gauss_hermite", "two_point"]

console = Console()
error_console = Console(stderr=True)


def parse_int_list(text: str) -> list[int]:
    """'8,32,128' -> [8, 32, 128]."""
    try:
        values = [int(item) for item in text.split(",") if item.strip()]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from e
    if not values or any(v < 1 for v in values):
        raise argparse.ArgumentTypeError("step counts must be positive integers")
    return values


def parse_matrix(text: str) -> list[list[float]]:
    """'1,0;0,3' -> [[1, 0], [0, 3]] (rows separated by ';')."""
    try:
        rows = [[float(v) for v in row.split(",")] for row in text.split(";")]
    except ValueError as e:
        raise argparse.ArgumentTypeError(f"invalid matrix {text!r}") from e
    if any(len(row) != len(rows) for row in rows):
        raise argparse.ArgumentTypeError(f"matrix {text!r} is not square")
    return rows


def noise_from_label(label: str, dimension: int) -> NoiseModel:
    """rademacher | gauss_hermite[:order] | two_point[:a]."""
    kind, _, arg = label.partition(":")
    if kind == "rademacher":
        return NoiseModel.rademacher(dimension)
    if kind == "gauss_hermite":
        return NoiseModel.gauss_hermite(int(arg) if arg else 7, dimension)
    if kind == "two_point":
        return NoiseModel.two_point(float(arg) if arg else 2.0, dimension)
    raise ConfigError(f"unknown noise {label!r}; use rademacher, gauss_hermite[:m] or two_point[:a]")


def _rows_table(title: str, frame: pd.DataFrame) -> Table:
    table = Table(title=title)
    for column in frame.columns:
        table.add_column(str(column), justify="right")
    for record in frame.itertuples(index=False):
        table.add_row(*[_fmt(v) for v in record])
    return table


def _fmt(value: object) -> str:
    if isinstance(value, float):
        return "-" if math.isnan(value) else f"{value:.6g}"
    return str(value)


def _storage(args: argparse.Namespace) -> FileResultStorage | None:
    if args.out is None:
        return None
    storage = FileResultStorage(args.out)
    storage.initialize()
    return storage


def _save(args: argparse.Namespace, name: str, report: BaseModel, table: pd.DataFrame | None = None) -> None:
    storage = _storage(args)
    if storage is None:
        return
    storage.save_report(name, report)
    if table is not None:
        storage.save_table(name, table)


def _half_width(args: argparse.Namespace, problem: ProblemFile) -> float | None:
    return args.grid_r if args.grid_r is not None else problem.grid.half_width


def _nodes(args: argparse.Namespace, problem: ProblemFile) -> int | None:
    return args.grid_nodes if args.grid_nodes is not None else problem.grid.nodes


def _seed(args: argparse.Namespace, problem: ProblemFile) -> int:
    configured = args.seed if args.seed is not None else problem.simulation.seed
    seed = get_or_generate_seed(configured)
    if configured is None:
        logger.info("No seed configured, using %d", seed)
    return seed


def _paths(args: argparse.Namespace, problem: ProblemFile) -> int:
    return args.paths if args.paths is not None else problem.simulation.paths


def cmd_converge(args: argparse.Namespace) -> int:
    """DP values over an n-list against the PDE reference."""
    problem = load_problem(args.spec)
    half_width = _half_width(args, problem)
    spacing = args.pde_spacing if args.pde_spacing is not None else problem.pde.spacing
    pde_config = reference_pde_config(problem.spec, half_width, spacing, problem.pde.theta)
    report = run_convergence(
        problem.spec, args.n or DEFAULT_N_LIST, half_width, _nodes(args, problem), pde_config
    )
    frame = pd.DataFrame([row.model_dump() for row in report.rows])
    console.print(_rows_table(f"{report.spec_name}: pde v(0,0) = {report.pde_value:.6f}", frame))
    _save(args, f"{report.spec_name}_converge", report, frame)
    return 0


def cmd_invariance(args: argparse.Namespace) -> int:
    """Covariance-only dependence under a right rotation."""
    problem = load_problem(args.spec)
    if args.orthogonal is not None:
        orthogonal = np.array(args.orthogonal)
    elif problem.spec.dimension == 2:
        orthogonal = rotation(math.radians(args.angle))
    else:
        orthogonal = np.eye(problem.spec.dimension)
    report = run_invariance(problem.spec, orthogonal, args.n or DEFAULT_N_LIST, _half_width(args, problem))
    frame = pd.DataFrame([row.model_dump() for row in report.rows])
    console.print(_rows_table(f"{report.spec_name}: invariance (gaussian={report.gaussian})", frame))
    _save(args, f"{report.spec_name}_invariance", report, frame)
    if not report.passed:
        raise CheckFailedError("invariance check failed: " + ", ".join(f"{g:.3g}" for g in frame["gap"]))
    return 0


def cmd_noise_study(args: argparse.Namespace) -> int:
    """DP values per noise law and n."""
    problem = load_problem(args.spec)
    labels = args.noises.split(",") if args.noises else DEFAULT_NOISES
    noises = [(label, noise_from_label(label, problem.spec.dimension)) for label in labels]
    report = run_noise_study(problem.spec, noises, args.n or DEFAULT_N_LIST, _half_width(args, problem))
    frame = pd.DataFrame(
        {"n": report.n_list} | {label: row for label, row in zip(report.noise_labels, report.values, strict=True)}
    )
    console.print(_rows_table(f"{report.spec_name}: noise study", frame))
    _save(args, f"{report.spec_name}_noise_study", report, frame)
    if not report.passed:
        raise CheckFailedError(
            f"spread across noise laws did not shrink: {report.max_gap_first:.3g} -> {report.max_gap_last:.3g}"
        )
    return 0


def cmd_g_eval(args: argparse.Namespace) -> int:
    """G(S) for the problem's uncertainty set."""
    problem = load_problem(args.spec)
    uncertainty = problem.spec.uncertainty
    candidates = candidate_values(np.array(args.matrix), uncertainty)
    index = int(np.argmax(candidates))
    report = GEvalReport(
        matrix=args.matrix,
        value=float(candidates[index]),
        argmax_index=index,
        argmax=uncertainty.extremes()[index].tolist(),
        candidates=candidates.tolist(),
    )
    console.print(f"G(S) = {report.value:.12g}  (argmax #{index}: {report.argmax})")
    _save(args, f"{problem.spec.name}_g_eval", report)
    return 0


def cmd_solve_dp(args: argparse.Namespace) -> int:
    """One DP solve; writes values and policy with --out."""
    problem = load_problem(args.spec)
    n = args.n[0] if args.n else DEFAULT_N_LIST[-1]
    grid = dp_grid(problem.spec, n, _half_width(args, problem), _nodes(args, problem))
    result = dp_solve(problem.spec, n, grid=grid, keep_slices=args.all_slices)
    report = SolveReport(
        solver="dp",
        spec_name=problem.spec.name,
        value=result.value_at_origin,
        n=n,
        steps=n,
        nodes=grid.nodes,
        half_widths=grid.half_widths,
        runtime=result.runtime,
        warnings=result.warnings,
        config=problem.model_dump(mode="json"),
    )
    console.print(f"v_{n}(0,0) = {report.value:.12g}  ({report.runtime:.2f}s, nodes {grid.nodes})")
    storage = _storage(args)
    if storage is not None:
        name = f"{problem.spec.name}_dp_n{n}"
        storage.save_report(name, report)
        storage.save_values(f"{name}_values", result.values)
        storage.save_policy(f"{name}_policy", result.policy)
    return 0


def cmd_solve_pde(args: argparse.Namespace) -> int:
    """One PDE solve."""
    problem = load_problem(args.spec)
    half_width = _half_width(args, problem)
    spacing = args.pde_spacing if args.pde_spacing is not None else problem.pde.spacing
    base = reference_pde_config(problem.spec, half_width, spacing, args.theta or problem.pde.theta)
    dt = args.dt if args.dt is not None else problem.pde.dt
    config = PdeConfig(grid=base.grid, dt=dt, theta=base.theta)
    result = pde_solve(problem.spec, config, keep_slices=args.all_slices)
    report = SolveReport(
        solver="pde",
        spec_name=problem.spec.name,
        value=result.value_at_origin,
        dt=result.dt,
        steps=result.steps,
        nodes=config.grid.nodes,
        half_widths=config.grid.half_widths,
        runtime=result.runtime,
        warnings=result.warnings,
        config=problem.model_dump(mode="json") | {"pde_config": config.model_dump(mode="json")},
    )
    console.print(f"v(0,0) = {report.value:.12g}  ({result.steps} steps, dt {result.dt:.3g})")
    storage = _storage(args)
    if storage is not None:
        name = f"{problem.spec.name}_pde"
        storage.save_report(name, report)
        storage.save_values(f"{name}_values", result.values)
    return 0


def cmd_simulate(args: argparse.Namespace) -> int:
    """Monte Carlo under a feedback policy or a fixed strategy."""
    problem = load_problem(args.spec)
    n = args.n[0] if args.n else DEFAULT_N_LIST[-1]
    strategy = StrategyKind(args.strategy)
    policy = None
    if strategy == StrategyKind.FEEDBACK:
        if args.policy is not None:
            policy = FileResultStorage(args.out or ".").load_policy(args.policy)
        else:
            policy = policy_for(problem.spec, n)
    sim = SimConfig(
        paths=_paths(args, problem),
        seed=_seed(args, problem),
        n=n,
        strategy=strategy,
        matrix=args.matrix,
        policy=policy,
        chunk_size=problem.simulation.chunk_size,
    )
    estimate = simulate(problem.spec, sim)
    report = SimulationReport(
        spec_name=problem.spec.name,
        strategy=strategy,
        n=n,
        estimate=estimate,
        config=problem.model_dump(mode="json") | {"simulation": sim.model_dump(mode="json")},
    )
    console.print(f"E f(X_{n}) = {estimate.mean:.6f} +- {estimate.stderr:.2g}  ({estimate.paths} paths)")
    _save(args, f"{problem.spec.name}_simulate_{strategy.value}_n{n}", report)
    return 0


def cmd_euler(args: argparse.Namespace) -> int:
    """Native increments against Gaussian increments under one policy."""
    problem = load_problem(args.spec)
    report = euler_compare(
        problem.spec, args.n or [16, 64, 256], _paths(args, problem), _seed(args, problem)
    )
    frame = pd.DataFrame(
        [
            {
                "n": row.n,
                "native": row.native.mean,
                "gaussian": row.gaussian.mean,
                "difference": row.difference,
                "combined_stderr": row.combined_stderr,
            }
            for row in report.rows
        ]
    )
    console.print(_rows_table(f"{report.spec_name}: euler comparison", frame))
    _save(args, f"{report.spec_name}_euler", report, frame)
    return 0


def cmd_consistency(args: argparse.Namespace) -> int:
    """Residuals of the built-in test functions at fixed and drifting points."""
    problem = load_problem(args.spec)
    spec = problem.spec
    n_list = args.n or [16, 64, 256, 1024]
    rng = np.random.default_rng(_seed(args, problem))
    points = [(float(rng.uniform(0.0, 0.9)), rng.uniform(-1.0, 1.0, spec.dimension)) for _ in range(args.points)]
    records = []
    for phi in consistency.builtin_test_functions(spec.dimension):
        tables = [("fixed", consistency.consistency_sweep(phi, points, n_list, spec.uncertainty, spec.noise))]
        tables += [
            (
                "drifting",
                consistency.drifting_sweep(
                    phi, t, x, n_list, spec.uncertainty, spec.noise, alpha=args.alpha, beta=args.beta
                ),
            )
            for t, x in points
        ]
        for sequence, table in tables:
            for row in table.rows:
                records.append(
                    {"function": phi.name, "sequence": sequence, "t": row.t, "x": str(row.x), "decaying": row.decaying}
                    | {f"n={n}": r for n, r in zip(table.n_list, row.residuals, strict=True)}
                )
    frame = pd.DataFrame(records)
    console.print(_rows_table(f"{spec.name}: consistency residuals", frame))
    storage = _storage(args)
    if storage is not None:
        storage.save_table(f"{spec.name}_consistency", frame)
    return 0


def cmd_oracle(args: argparse.Namespace) -> int:
    """Grid DP against brute-force enumeration for small n."""
    problem = load_problem(args.spec)
    reports = [compare_with_dp(problem.spec, n) for n in (args.n or [1, 2, 3, 4])]
    frame = pd.DataFrame([r.model_dump() for r in reports])
    console.print(_rows_table(f"{problem.spec.name}: oracle comparison", frame))
    storage = _storage(args)
    if storage is not None:
        storage.save_table(f"{problem.spec.name}_oracle", frame)
    return 0


def cmd_results(args: argparse.Namespace) -> int:
    """List the stored results, or print one of them."""
    storage = FileResultStorage(args.out)
    if args.name is None:
        table = Table(title=f"results in {args.out}")
        table.add_column("name")
        for name in storage.list_results():
            table.add_row(name)
        console.print(table)
        return 0
    frame = storage.load_table(args.name)
    if frame is not None:
        console.print(_rows_table(args.name, frame))
        return 0
    report = storage.load_report(args.name)
    if report is None:
        raise UncertainCLTError(f"no stored result named {args.name!r} in {args.out}")
    console.print_json(data=report)
    return 0


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with one subparser per command."""
    parser = argparse.ArgumentParser(
        prog="uncertain-clt",
        description="Limits of controlled random walks under matrix uncertainty.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true", help="debug logging")
    verbosity.add_argument("--quiet", action="store_true", help="warnings and errors only")

    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--spec", required=True, help="YAML problem file")
    common.add_argument("--n", type=parse_int_list, help="comma-separated step counts")
    common.add_argument("--grid-r", type=float, help="grid half-width")
    common.add_argument("--grid-nodes", type=int, help="DP nodes per axis (odd)")
    common.add_argument("--paths", type=int, help="Monte Carlo paths")
    common.add_argument("--seed", type=int, help="root seed")
    common.add_argument("--out", help="output directory for JSON/CSV results")

    sub = parser.add_subparsers(dest="command", required=True)
    commands: dict[str, tuple[Callable[[argparse.Namespace], int], str]] = {
        "converge": (cmd_converge, "DP convergence to the PDE value"),
        "invariance": (cmd_invariance, "dependence on A A^T only"),
        "noise-study": (cmd_noise_study, "independence of the noise law"),
        "g-eval": (cmd_g_eval, "evaluate G(S)"),
        "solve-dp": (cmd_solve_dp, "one DP solve"),
        "solve-pde": (cmd_solve_pde, "one PDE solve"),
        "simulate": (cmd_simulate, "Monte Carlo estimate"),
        "euler": (cmd_euler, "native vs Gaussian increments"),
        "consistency": (cmd_consistency, "consistency residuals"),
        "oracle": (cmd_oracle, "brute-force comparison for small n"),
    }
    subparsers = {}
    for name, (handler, help_text) in commands.items():
        subparsers[name] = sub.add_parser(name, parents=[common], help=help_text)
        subparsers[name].set_defaults(handler=handler)

    for name in ("converge", "solve-pde"):
        subparsers[name].add_argument("--pde-spacing", type=float, help="PDE grid spacing")
    subparsers["solve-pde"].add_argument("--dt", type=float, help="PDE time step")
    subparsers["solve-pde"].add_argument("--theta", type=float, help="CFL safety factor")
    for name in ("solve-dp", "solve-pde"):
        subparsers[name].add_argument(
            "--all-slices", action="store_true", help="keep every time slice in the values CSV"
        )
    subparsers["invariance"].add_argument("--orthogonal", type=parse_matrix, help="matrix O, rows ';'-separated")
    subparsers["invariance"].add_argument("--angle", type=float, default=45.0, help="rotation angle in degrees (d=2)")
    subparsers["noise-study"].add_argument("--noises", help="comma-separated noise labels")
    subparsers["g-eval"].add_argument("--matrix", type=parse_matrix, required=True, help="symmetric S")
    subparsers["simulate"].add_argument(
        "--strategy", choices=[s.value for s in StrategyKind], default=StrategyKind.FEEDBACK.value
    )
    subparsers["simulate"].add_argument("--matrix", type=parse_matrix, help="fixed matrix A")
    subparsers["simulate"].add_argument("--policy", help="policy CSV written by solve-dp")
    subparsers["consistency"].add_argument("--points", type=int, default=5, help="random evaluation points")
    subparsers["consistency"].add_argument(
        "--alpha", type=float, default=1.0, help="time drift: points at t + alpha / n"
    )
    subparsers["consistency"].add_argument(
        "--beta", type=float, default=1.0, help="space drift: points at x + beta / sqrt(n)"
    )

    results = sub.add_parser("results", help="list or print stored results")
    results.add_argument("--out", required=True, help="results directory")
    results.add_argument("--name", help="result to print; lists all when omitted")
    results.set_defaults(handler=cmd_results)
    return parser


def configure_logging(verbose: bool, quiet: bool) -> None:
    """Configure the root logger once for the CLI."""
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s")


def main(argv: Sequence[str] | None = None) -> int:
    """Entry point; returns the process exit code."""
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args.verbose, args.quiet)
    try:
        code: int = args.handler(args)
    except ConfigError as e:
        error_console.print(f"[red]configuration error:[/red] {e}")
        return 2
    except UncertainCLTError as e:
        error_console.print(f"[red]error:[/red] {e}")
        return 1
    except ValueError as e:
        error_console.print(f"[red]invalid value:[/red] {e}")
        return 1
    return code


if __name__ == "__main__":
    sys.exit(main())
