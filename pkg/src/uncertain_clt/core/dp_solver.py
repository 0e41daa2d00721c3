"""Backward value iteration for the discrete controlled walk.

Implements the recurrence

    v_n(1, x) = f(x),
    v_n(t_j, x) = max_A E v_n(t_{j+1}, x + A xi / sqrt(n)),

on a spatial grid with multilinear interpolation (clamped at the boundary),
together with the maximizing matrix per node, which is the feedback policy
simulated by ``core.simulator``.
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from src.uncertain_clt.core.errors import (
    DimensionMismatchError,
    PayoffBoundError,
    UnsupportedNoiseError,
    UnsupportedUncertaintyError,
)
from src.uncertain_clt.core.grid import (
    MAX_GRID_DIMENSION,
    FeedbackPolicy,
    PolicyArray,
    SpatialGrid,
    ValueGrid,
    shifted_values,
)
from src.uncertain_clt.core.models import NoiseKind, NoiseModel, ProblemSpec, UncertaintySet
from src.uncertain_clt.core.problem import default_half_width, validate

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
BOUND_SLACK = 1e-12  # relative rounding allowance on |v| <= M
LATTICE_TOLERANCE = 1e-9
MIN_DOMAIN_SIGMAS = 3.0
MAX_DEFAULT_NODES = {1: 8001, 2: 801, 3: 121}


@dataclass(frozen=True)
class DpResult:
    """Value slices, feedback policy and v_n(0, 0) of one backward solve."""

    values: ValueGrid
    policy: FeedbackPolicy
    value_at_origin: float
    n: int
    runtime: float
    warnings: list[str] = field(default_factory=list)


def covariance_factor(covariance: FloatArray) -> FloatArray:
    """L with L L^T = C; Cholesky when C is positive definite, symmetric square root otherwise."""
    sym = 0.5 * (covariance + covariance.T)
    try:
        return np.asarray(np.linalg.cholesky(sym), dtype=float)
    except np.linalg.LinAlgError:
        eigenvalues, eigenvectors = np.linalg.eigh(sym)
        return np.asarray(eigenvectors * np.sqrt(np.clip(eigenvalues, 0.0, None)), dtype=float)


def unit_displacements(
    uncertainty: UncertaintySet, noise: NoiseModel
) -> tuple[list[FloatArray], FloatArray]:
    """Displacements A z_k (before the 1/sqrt(n) scaling) per extreme matrix, and the weights.

    Gaussian noise uses a square-root factor of A A^T instead of A: the law of
    A xi then depends on A A^T only, exactly as for the Gaussian itself.

    Raises:
        UnsupportedNoiseError: For sampler-only noise
    """
    if not noise.has_nodes:
        raise UnsupportedNoiseError(
            "Quadrature-based operations need atoms or Gauss-Hermite noise, got a sampler"
        )
    if noise.dimension != uncertainty.dimension:
        raise DimensionMismatchError(
            f"Noise has d={noise.dimension}, uncertainty set has d={uncertainty.dimension}"
        )
    points, weights = noise.nodes()
    if noise.kind == NoiseKind.GAUSS_HERMITE:
        factors = [covariance_factor(c) for c in uncertainty.covariances()]
    else:
        factors = uncertainty.extremes()
    return [points @ factor.T for factor in factors], weights


def _lattice_unit(values: FloatArray) -> tuple[float | None, bool]:
    """Smallest nonzero |value| and whether every value is an integer multiple of it."""
    magnitudes = np.abs(values)
    scale = float(magnitudes.max(initial=0.0))
    nonzero = magnitudes[magnitudes > 1e-12 * max(scale, 1.0)]
    if nonzero.size == 0:
        return None, True
    unit = float(nonzero.min())
    ratios = magnitudes / unit
    return unit, bool(np.all(np.abs(ratios - np.rint(ratios)) <= LATTICE_TOLERANCE))


def default_grid(
    spec: ProblemSpec,
    n: int,
    half_width: float | None = None,
    refine: int | None = None,
    max_nodes: int | None = None,
) -> tuple[SpatialGrid, list[str]]:
    """Grid for an n-step solve.

    Per axis the spacing is the smallest nonzero displacement coordinate
    divided by sqrt(n). When every displacement is an integer multiple of it
    the walk stays on the nodes and the recursion is exact there; otherwise
    the spacing is refined by ceil(n^(1/4)) so that the accumulated
    interpolation error vanishes as n grows.

    Returns:
        Tuple of (grid, warnings)
    """
    d = spec.dimension
    if d > MAX_GRID_DIMENSION:
        raise UnsupportedUncertaintyError(f"Grid-based DP supports d <= 3, got d={d}")
    radius = half_width if half_width is not None else default_half_width(spec.uncertainty)
    displacements, _ = unit_displacements(spec.uncertainty, spec.noise)
    stacked = np.concatenate(displacements, axis=0)
    cap = max_nodes if max_nodes is not None else MAX_DEFAULT_NODES[d]
    sigma_max = spec.uncertainty.sigma_max

    warnings: list[str] = []
    half_widths: list[float] = []
    nodes: list[int] = []
    for r in range(d):
        unit, aligned = _lattice_unit(stacked[:, r])
        if unit is None:
            unit, aligned = sigma_max, False
        factor = refine if refine is not None else (1 if aligned else max(2, math.ceil(n**0.25)))
        spacing = unit / (math.sqrt(n) * factor)
        cells = math.ceil(radius / spacing - 1e-9)
        if 2 * cells + 1 > cap:
            cells = (cap - 1) // 2
            spacing = radius / cells
            warnings.append(
                f"axis {r}: node cap {cap} reached, spacing {spacing:.3g} instead of the "
                f"{unit / (math.sqrt(n) * factor):.3g} requested"
            )
        half_widths.append(cells * spacing)
        nodes.append(2 * cells + 1)
    return SpatialGrid(half_widths=half_widths, nodes=nodes), warnings


def grid_warnings(spec: ProblemSpec, n: int, grid: SpatialGrid) -> list[str]:
    """Domain-size and resolution warnings for a solve on ``grid``."""
    warnings: list[str] = []
    sigma_max = spec.uncertainty.sigma_max
    if min(grid.half_widths) < MIN_DOMAIN_SIGMAS * sigma_max:
        warnings.append(
            f"grid half-width {min(grid.half_widths):.3g} below {MIN_DOMAIN_SIGMAS:g} sigma_max "
            f"= {MIN_DOMAIN_SIGMAS * sigma_max:.3g}; boundary clamping may bias the value"
        )
    jump = sigma_max / math.sqrt(n)
    if max(grid.spacing) > jump:
        warnings.append(
            f"grid spacing {max(grid.spacing):.3g} exceeds the noise jump sigma_max/sqrt(n) "
            f"= {jump:.3g}; interpolation error may dominate"
        )
    return warnings


def dp_step(
    v_next: FloatArray,
    uncertainty: UncertaintySet,
    noise: NoiseModel,
    n: int,
    grid: SpatialGrid,
) -> tuple[FloatArray, PolicyArray]:
    """One backward step: v_j(x) = max_A sum_k p_k I(v_next)(x + A z_k / sqrt(n)).

    Args:
        v_next: Slice at t_{j+1}, shape grid.shape
        uncertainty: Uncertainty set
        noise: Noise law with atoms or quadrature nodes
        n: Number of time steps (sets the 1/sqrt(n) scaling)
        grid: Spatial grid of the slice

    Returns:
        Tuple of (v_j slice, policy slice of extreme-matrix indices)

    Raises:
        UnsupportedNoiseError: For sampler-only noise
    """
    displacements, weights = unit_displacements(uncertainty, noise)
    return _step(v_next, displacements, weights, n, grid)


def _step(
    v_next: FloatArray,
    displacements: list[FloatArray],
    weights: FloatArray,
    n: int,
    grid: SpatialGrid,
) -> tuple[FloatArray, PolicyArray]:
    scale = 1.0 / math.sqrt(n)
    spacing = grid.spacing
    best = np.full(grid.shape, -np.inf)
    best_index = np.zeros(grid.shape, dtype=np.int16)
    for i, offsets in enumerate(displacements):
        expectation = np.zeros(grid.shape)
        for weight, offset in zip(weights, offsets, strict=True):
            expectation += weight * shifted_values(v_next, offset * scale, spacing)
        # strict comparison keeps the lowest index on ties
        better = expectation > best
        best = np.where(better, expectation, best)
        best_index = np.where(better, i, best_index)
    return best, best_index


def dp_solve(
    spec: ProblemSpec,
    n: int,
    grid: SpatialGrid | None = None,
    keep_slices: bool = True,
) -> DpResult:
    """Backward iteration from t = 1 to t = 0.

    Args:
        spec: Problem to solve
        n: Number of time steps (>= 1)
        grid: Spatial grid; defaults to ``default_grid(spec, n)``
        keep_slices: Store every slice; otherwise only t = 0 and t = 1 (the
            policy is always complete)

    Returns:
        DpResult with every slice, the feedback policy and v_n(0, 0)

    Raises:
        ValueError: If n < 1
        UnsupportedNoiseError: For sampler-only noise
        PayoffBoundError: If the payoff or a value slice exceeds M
    """
    if n < 1:
        raise ValueError(f"Need at least one time step, got n={n}")
    start = time.perf_counter()
    validate(spec)
    warnings: list[str] = []
    if grid is None:
        grid, warnings = default_grid(spec, n)
    elif grid.dimension != spec.dimension:
        raise DimensionMismatchError(
            f"Grid has d={grid.dimension}, problem has d={spec.dimension}"
        )
    warnings += grid_warnings(spec, n, grid)
    for message in warnings:
        logger.warning("%s (n=%d): %s", spec.name, n, message)

    displacements, weights = unit_displacements(spec.uncertainty, spec.noise)
    bound = spec.payoff.resolve_bound(grid.half_widths)
    terminal = spec.payoff.evaluate(grid.points())
    indices = np.empty((n, *grid.shape), dtype=np.int16)
    slices = [terminal]
    current = terminal
    max_abs = float(np.max(np.abs(terminal)))
    for j in range(n - 1, -1, -1):
        current, indices[j] = _step(current, displacements, weights, n, grid)
        max_abs = max(max_abs, float(np.max(np.abs(current))))
        if keep_slices or j == 0:
            slices.append(current)
    if max_abs > bound * (1.0 + BOUND_SLACK):
        raise PayoffBoundError(f"Uniform bound violated: max |v| = {max_abs:.6g} > M = {bound:.6g}")

    times = spec.time_points(n)
    kept_times = times if keep_slices else times[[0, n]]
    value_grid = ValueGrid(
        values=np.stack(slices[::-1]), times=kept_times, grid=grid, bound=bound
    )
    policy = FeedbackPolicy(
        indices=indices, times=times[:-1], grid=grid, extremes=spec.uncertainty.extremes()
    )
    runtime = time.perf_counter() - start
    value = value_grid.value_at_origin
    logger.debug("dp_solve %s n=%d nodes=%s -> %.10g (%.2fs)", spec.name, n, grid.nodes, value, runtime)
    return DpResult(
        values=value_grid,
        policy=policy,
        value_at_origin=value,
        n=n,
        runtime=runtime,
        warnings=warnings,
    )


def extract_policy_matrix(
    policy: FeedbackPolicy, uncertainty: UncertaintySet, j: int, x: FloatArray
) -> FloatArray:
    """Extreme matrix chosen at step j at the node nearest to x (clamped to the grid)."""
    if not 0 <= j < policy.steps:
        raise ValueError(f"Step {j} outside 0..{policy.steps - 1}")
    point = np.atleast_1d(np.asarray(x, dtype=float))
    return uncertainty.extremes()[int(policy.indices_at(j, point))]
