"""Convergence, invariance and noise-independence studies, plus the benchmark problems."""

import itertools
import logging
import math

import numpy as np
from numpy.typing import NDArray

from src.uncertain_clt.core.dp_solver import default_grid, dp_solve
from src.uncertain_clt.core.errors import NonOrthogonalMatrixError
from src.uncertain_clt.core.grid import SpatialGrid
from src.uncertain_clt.core.models import (
    ConvergenceReport,
    ConvergenceRow,
    InvarianceReport,
    InvarianceRow,
    NoiseKind,
    NoiseModel,
    NoiseStudyReport,
    Payoff,
    PayoffKind,
    PdeConfig,
    ProblemSpec,
    UncertaintySet,
)
from src.uncertain_clt.core.pde_solver import pde_solve
from src.uncertain_clt.core.problem import default_half_width, validate
from src.uncertain_clt.core.simulator import classical_limit
from src.uncertain_clt.utils.parallel import ordered_map

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

ORTHOGONALITY_TOLERANCE = 1e-10
GAUSSIAN_INVARIANCE_TOLERANCE = 1e-6
NOISE_GAP_FLOOR = 1e-9  # spreads below this count as identical values
PDE_CELLS_PER_HALF_WIDTH = {1: 240, 2: 40}


def convex_benchmark() -> ProblemSpec:
    """d = 1, sigma in [1, 2], f(x) = x^2, Rademacher noise; limit sigma_hi^2 = 4."""
    return ProblemSpec(
        name="convex",
        uncertainty=UncertaintySet.scalar_interval(1.0, 2.0),
        noise=NoiseModel.rademacher(),
        payoff=Payoff.builtin(PayoffKind.QUADRATIC),
    )


def concave_benchmark() -> ProblemSpec:
    """Mirror of the convex benchmark with f(x) = -x^2; limit -sigma_lo^2 = -1."""
    return convex_benchmark().model_copy(
        update={"name": "concave", "payoff": Payoff.builtin(PayoffKind.NEG_QUADRATIC)}
    )


def classical_benchmark() -> ProblemSpec:
    """Singleton {1}, f = cos, Rademacher noise; limit exp(-1/2)."""
    return ProblemSpec(
        name="classical",
        uncertainty=UncertaintySet.finite_set([[[1.0]]]),
        noise=NoiseModel.rademacher(),
        payoff=Payoff.builtin(PayoffKind.COSINE),
    )


def benchmark(name: str) -> ProblemSpec:
    """Look up a benchmark by name."""
    builders = {
        "convex": convex_benchmark,
        "concave": concave_benchmark,
        "classical": classical_benchmark,
    }
    if name not in builders:
        raise ValueError(f"Unknown benchmark {name!r}; choose from {sorted(builders)}")
    return builders[name]()


def rotation(angle: float) -> FloatArray:
    """2 x 2 rotation matrix."""
    c, s = math.cos(angle), math.sin(angle)
    return np.array([[c, -s], [s, c]])


def dp_grid(
    spec: ProblemSpec, n: int, half_width: float | None = None, nodes: int | None = None
) -> SpatialGrid:
    """Explicit uniform grid when ``nodes`` is given, else the solver default."""
    if nodes is not None:
        radius = half_width if half_width is not None else default_half_width(spec.uncertainty)
        return SpatialGrid.uniform(radius, nodes, spec.dimension)
    grid, _ = default_grid(spec, n, half_width=half_width)
    return grid


def reference_pde_config(
    spec: ProblemSpec,
    half_width: float | None = None,
    spacing: float | None = None,
    theta: float = 0.9,
) -> PdeConfig:
    """PDE grid on the same domain; spacing defaults to R/240 in 1-d and R/40 in 2-d."""
    radius = half_width if half_width is not None else default_half_width(spec.uncertainty)
    h = spacing if spacing is not None else radius / PDE_CELLS_PER_HALF_WIDTH.get(spec.dimension, 40)
    return PdeConfig(grid=SpatialGrid.from_spacing(radius, h, spec.dimension), theta=theta)


def _rate(gap_prev: float, gap: float, n_prev: int, n: int) -> float | None:
    if gap_prev <= 0 or gap <= 0:
        return None
    return math.log(gap_prev / gap) / math.log(n / n_prev)


def run_convergence(
    spec: ProblemSpec,
    n_list: list[int],
    half_width: float | None = None,
    nodes: int | None = None,
    pde_config: PdeConfig | None = None,
    workers: int | None = None,
) -> ConvergenceReport:
    """DP values for each n against one PDE reference solve.

    Args:
        spec: Problem (d <= 2 for the PDE reference)
        n_list: Step counts; the report is sorted by n
        half_width: DP/PDE domain half-width (default 6 sigma_max)
        nodes: Fixed DP node count per axis (default: lattice-aligned per n)
        pde_config: Reference discretization (default ``reference_pde_config``)
        workers: Threads for the per-n solves

    Returns:
        ConvergenceReport with gaps |dp - pde| and empirical rates
    """
    validate(spec)
    config = pde_config or reference_pde_config(spec, half_width)
    pde = pde_solve(spec, config, keep_slices=False)
    ordered = sorted(set(n_list))

    def solve(n: int) -> tuple[float, float]:
        result = dp_solve(spec, n, grid=dp_grid(spec, n, half_width, nodes), keep_slices=False)
        return result.value_at_origin, result.runtime

    solved = ordered_map(solve, ordered, workers)
    rows: list[ConvergenceRow] = []
    for k, (n, (value, runtime)) in enumerate(zip(ordered, solved, strict=True)):
        gap = abs(value - pde.value_at_origin)
        rate = _rate(rows[-1].gap, gap, ordered[k - 1], n) if rows else None
        rows.append(ConvergenceRow(n=n, dp_value=value, gap=gap, runtime=runtime, rate=rate))
        logger.info("converge %s n=%d: dp=%.6f gap=%.3g", spec.name, n, value, gap)

    return ConvergenceReport(
        spec_name=spec.name,
        pde_value=pde.value_at_origin,
        rows=rows,
        rate=rows[-1].rate if rows else None,
        fixed_matrix_limits=[classical_limit(spec.payoff, a) for a in spec.uncertainty.extremes()],
        config={
            "spec": spec.model_dump(mode="json"),
            "n_list": ordered,
            "half_width": half_width,
            "nodes": nodes,
            "pde": config.model_dump(mode="json") | {"dt": pde.dt, "steps": pde.steps},
        },
    )


def check_orthogonal(matrix: FloatArray, tol: float = ORTHOGONALITY_TOLERANCE) -> FloatArray:
    """Return O as an array if O O^T = I within ``tol``.

    Raises:
        NonOrthogonalMatrixError: Otherwise
    """
    o = np.atleast_2d(np.asarray(matrix, dtype=float))
    if o.shape[0] != o.shape[1]:
        raise NonOrthogonalMatrixError(f"Expected a square matrix, got shape {o.shape}")
    defect = float(np.max(np.abs(o @ o.T - np.eye(o.shape[0]))))
    if defect > tol:
        raise NonOrthogonalMatrixError(f"O O^T deviates from I by {defect:.3g} (tolerance {tol:g})")
    return o


def run_invariance(
    spec: ProblemSpec,
    orthogonal: FloatArray,
    n_list: list[int],
    half_width: float | None = None,
    workers: int | None = None,
) -> InvarianceReport:
    """Solve with the uncertainty set and with its right-rotation by O.

    With Gauss-Hermite noise the values must agree at every n within 1e-6;
    with any other noise the gap must shrink from the first n to the last.
    """
    o = check_orthogonal(orthogonal)
    if o.shape[0] != spec.dimension:
        raise NonOrthogonalMatrixError(f"O is {o.shape[0]}x{o.shape[0]}, problem has d={spec.dimension}")
    rotated = spec.with_uncertainty(spec.uncertainty.rotated(o))
    ordered = sorted(set(n_list))

    def solve(n: int) -> InvarianceRow:
        value = dp_solve(spec, n, grid=dp_grid(spec, n, half_width), keep_slices=False)
        turned = dp_solve(rotated, n, grid=dp_grid(rotated, n, half_width), keep_slices=False)
        gap = abs(value.value_at_origin - turned.value_at_origin)
        return InvarianceRow(
            n=n, value=value.value_at_origin, rotated_value=turned.value_at_origin, gap=gap
        )

    rows = ordered_map(solve, ordered, workers)
    gaussian = spec.noise.kind == NoiseKind.GAUSS_HERMITE
    within = all(row.gap <= GAUSSIAN_INVARIANCE_TOLERANCE for row in rows)
    if gaussian:
        passed = within
    else:
        passed = within or (len(rows) >= 2 and rows[-1].gap < rows[0].gap)
    logger.info("invariance %s: gaps %s", spec.name, [f"{r.gap:.3g}" for r in rows])
    return InvarianceReport(
        spec_name=spec.name,
        gaussian=gaussian,
        tolerance=GAUSSIAN_INVARIANCE_TOLERANCE,
        rows=rows,
        passed=passed,
        config={
            "spec": spec.model_dump(mode="json"),
            "orthogonal": o.tolist(),
            "n_list": ordered,
            "half_width": half_width,
        },
    )


def _max_pairwise_gap(values: list[float]) -> float:
    return max((abs(a - b) for a, b in itertools.combinations(values, 2)), default=0.0)


def run_noise_study(
    spec: ProblemSpec,
    noises: list[tuple[str, NoiseModel]],
    n_list: list[int],
    half_width: float | None = None,
    workers: int | None = None,
) -> NoiseStudyReport:
    """DP values per (noise law, n); the spread across laws must shrink with n.

    Raises:
        MomentConditionError: If a law violates the moment conditions
    """
    variants = [spec.with_noise(noise) for _, noise in noises]
    for variant in variants:
        validate(variant)
    ordered = sorted(set(n_list))
    cells = list(itertools.product(range(len(variants)), ordered))

    def solve(cell: tuple[int, int]) -> float:
        i, n = cell
        variant = variants[i]
        return dp_solve(
            variant, n, grid=dp_grid(variant, n, half_width), keep_slices=False
        ).value_at_origin

    flat = ordered_map(solve, cells, workers)
    values = [flat[i * len(ordered) : (i + 1) * len(ordered)] for i in range(len(variants))]
    first = _max_pairwise_gap([row[0] for row in values])
    last = _max_pairwise_gap([row[-1] for row in values])
    passed = len(variants) < 2 or len(ordered) < 2 or last < first or last <= NOISE_GAP_FLOOR
    return NoiseStudyReport(
        spec_name=spec.name,
        noise_labels=[label for label, _ in noises],
        n_list=ordered,
        values=values,
        max_gap_first=first,
        max_gap_last=last,
        passed=passed,
        config={
            "spec": spec.model_dump(mode="json"),
            "noises": {label: noise.model_dump(mode="json") for label, noise in noises},
            "n_list": ordered,
            "half_width": half_width,
        },
    )
