"""Explicit monotone finite differences for the G-heat equation.

Solves -v_t - G(D^2 v) = 0 on [0, 1) x box with v(1, .) = f by marching
backward in time:

    v(t) = v(t + dt) + dt * max_A L_A v(t + dt),

where L_A v = 1/2 Tr(A A^T D^2_h v) uses central second differences and, in
two dimensions, the seven-point cross stencil oriented by the sign of the
off-diagonal covariance entry. Boundary nodes stay at f.
"""

import logging
import math
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from src.uncertain_clt.core.errors import (
    CflViolationError,
    DimensionMismatchError,
    MaximumPrincipleError,
    UnsupportedUncertaintyError,
)
from src.uncertain_clt.core.grid import FeedbackPolicy, PolicyArray, SpatialGrid, ValueGrid
from src.uncertain_clt.core.models import PdeConfig, ProblemSpec, UncertaintySet
from src.uncertain_clt.core.problem import validate

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

MAX_PDE_DIMENSION = 2
MAXIMUM_PRINCIPLE_SLACK = 1e-12
ISOTROPY_TOLERANCE = 1e-12


@dataclass(frozen=True)
class PdeResult:
    """PDE slices, v(0, 0) and the time discretization actually used."""

    values: ValueGrid
    value_at_origin: float
    dt: float
    steps: int
    runtime: float
    warnings: list[str] = field(default_factory=list)


def cfl_max_dt(h: float, uncertainty: UncertaintySet, dimension: int | None = None) -> float:
    """Largest stable explicit step h^2 / (d * lambda_max).

    Raises:
        ValueError: If h is not positive
    """
    if h <= 0:
        raise ValueError(f"Spacing must be positive, got {h}")
    d = dimension if dimension is not None else uncertainty.dimension
    return h * h / (d * uncertainty.lambda_max)


def check_supported(spec: ProblemSpec, grid: SpatialGrid) -> None:
    """Reject problems outside the stencil's monotonicity conditions.

    Raises:
        DimensionMismatchError: If grid and problem disagree on d
        UnsupportedUncertaintyError: For d > 2, anisotropic 2-d grids, or a
            covariance that is not diagonally dominant
    """
    d = spec.dimension
    if grid.dimension != d:
        raise DimensionMismatchError(f"Grid has d={grid.dimension}, problem has d={d}")
    if d > MAX_PDE_DIMENSION:
        raise UnsupportedUncertaintyError(f"PDE solver supports d <= 2, got d={d}")
    if d == 2:
        h1, h2 = grid.spacing
        if abs(h1 - h2) > ISOTROPY_TOLERANCE * max(h1, h2):
            raise UnsupportedUncertaintyError(
                f"Cross stencil needs equal spacing on both axes, got {h1:.6g} and {h2:.6g}"
            )
        for k, c in enumerate(spec.uncertainty.covariances()):
            if abs(c[0, 1]) > min(c[0, 0], c[1, 1]) + 1e-14:
                raise UnsupportedUncertaintyError(
                    f"Extreme matrix {k}: A A^T = {c.tolist()} is not diagonally dominant; "
                    "the seven-point stencil would not be monotone"
                )


def _generator(v: FloatArray, covariance: FloatArray, h: float) -> FloatArray:
    """1/2 Tr(C D^2_h v) at the interior nodes."""
    inv = 1.0 / (h * h)
    if v.ndim == 1:
        return 0.5 * covariance[0, 0] * (v[2:] - 2.0 * v[1:-1] + v[:-2]) * inv

    centre = v[1:-1, 1:-1]
    east, west = v[2:, 1:-1], v[:-2, 1:-1]
    north, south = v[1:-1, 2:], v[1:-1, :-2]
    v_xx = (east - 2.0 * centre + west) * inv
    v_yy = (north - 2.0 * centre + south) * inv
    axis_sum = east + west + north + south
    c = covariance[0, 1]
    if c >= 0:
        v_xy = (2.0 * centre + v[2:, 2:] + v[:-2, :-2] - axis_sum) * (0.5 * inv)
    else:
        v_xy = -(2.0 * centre + v[2:, :-2] + v[:-2, 2:] - axis_sum) * (0.5 * inv)
    return 0.5 * (covariance[0, 0] * v_xx + covariance[1, 1] * v_yy) + c * v_xy


def pde_step(
    v_next: FloatArray, covariances: list[FloatArray], h: float, dt: float
) -> tuple[FloatArray, PolicyArray]:
    """One explicit backward step with boundary nodes held fixed.

    Returns:
        Tuple of (slice at t, index of the maximizing covariance per node;
        0 on the boundary)
    """
    interior = (slice(1, -1),) * v_next.ndim
    best = np.full(v_next[interior].shape, -np.inf)
    best_index = np.zeros(v_next[interior].shape, dtype=np.int16)
    for i, covariance in enumerate(covariances):
        candidate = _generator(v_next, covariance, h)
        better = candidate > best
        best = np.where(better, candidate, best)
        best_index = np.where(better, i, best_index)
    v = v_next.copy()
    v[interior] = v_next[interior] + dt * best
    index = np.zeros(v_next.shape, dtype=np.int16)
    index[interior] = best_index
    return v, index


def resolve_time_step(spec: ProblemSpec, config: PdeConfig) -> tuple[float, int]:
    """Time step and number of steps covering [0, 1] exactly.

    Raises:
        CflViolationError: If an explicit dt exceeds theta times the CFL bound
    """
    limit = config.theta * cfl_max_dt(config.grid.min_spacing, spec.uncertainty)
    if config.dt is None:
        steps = math.ceil(1.0 / limit - 1e-12)
        return 1.0 / steps, steps
    if config.dt > limit * (1.0 + 1e-12):
        raise CflViolationError(
            f"dt = {config.dt:.6g} exceeds theta * CFL = {config.theta} * "
            f"{limit / config.theta:.6g} = {limit:.6g}"
        )
    steps = math.ceil(1.0 / config.dt - 1e-9)
    return 1.0 / steps, steps


def _march(
    spec: ProblemSpec, config: PdeConfig, keep_slices: bool, with_policy: bool
) -> tuple[PdeResult, PolicyArray | None]:
    start = time.perf_counter()
    validate(spec)
    grid = config.grid
    check_supported(spec, grid)
    dt, steps = resolve_time_step(spec, config)
    h = grid.min_spacing
    covariances = spec.uncertainty.covariances()

    warnings: list[str] = []
    sigma_max = spec.uncertainty.sigma_max
    if min(grid.half_widths) < 3.0 * sigma_max:
        warnings.append(
            f"grid half-width {min(grid.half_widths):.3g} below 3 sigma_max = "
            f"{3.0 * sigma_max:.3g}; the frozen boundary may bias the value"
        )
    for message in warnings:
        logger.warning("%s: %s", spec.name, message)

    terminal = spec.payoff.evaluate(grid.points())
    lo, hi = float(terminal.min()), float(terminal.max())
    slack = MAXIMUM_PRINCIPLE_SLACK * max(1.0, abs(lo), abs(hi))
    slices = [terminal]
    policy = np.zeros((steps, *grid.shape), dtype=np.int16) if with_policy else None
    current = terminal
    for j in range(steps - 1, -1, -1):
        current, index = pde_step(current, covariances, h, dt)
        if policy is not None:
            policy[j] = index
        if keep_slices or j == 0:
            slices.append(current)
        if current.min() < lo - slack or current.max() > hi + slack:
            raise MaximumPrincipleError(
                f"Discrete maximum principle violated at step {j}: "
                f"[{current.min():.6g}, {current.max():.6g}] outside [{lo:.6g}, {hi:.6g}]"
            )

    times = np.arange(steps + 1, dtype=float) * dt
    times[-1] = 1.0
    kept_times = times if keep_slices else times[[0, steps]]
    bound = spec.payoff.resolve_bound(grid.half_widths)
    value_grid = ValueGrid(values=np.stack(slices[::-1]), times=kept_times, grid=grid, bound=bound)
    runtime = time.perf_counter() - start
    value = value_grid.value_at_origin
    logger.debug(
        "pde_solve %s nodes=%s steps=%d dt=%.3g -> %.10g (%.2fs)",
        spec.name,
        grid.nodes,
        steps,
        dt,
        value,
        runtime,
    )
    result = PdeResult(
        values=value_grid,
        value_at_origin=value,
        dt=dt,
        steps=steps,
        runtime=runtime,
        warnings=warnings,
    )
    return result, policy


def pde_solve(spec: ProblemSpec, config: PdeConfig, keep_slices: bool = True) -> PdeResult:
    """Backward march from t = 1 to t = 0.

    Args:
        spec: Problem to solve (d <= 2)
        config: Grid, time step and CFL safety factor
        keep_slices: Store every time slice; otherwise only t = 0 and t = 1

    Returns:
        PdeResult with the slices and v(0, 0)

    Raises:
        CflViolationError: If the requested dt is unstable
        UnsupportedUncertaintyError: Outside the monotone stencil's conditions
        PayoffBoundError: If the payoff exceeds its bound M
    """
    result, _ = _march(spec, config, keep_slices, with_policy=False)
    return result


def pde_policy(spec: ProblemSpec, config: PdeConfig) -> FeedbackPolicy:
    """Maximizing extreme matrix of G(D^2_h v) per PDE time step and node.

    Boundary nodes, where no generator is evaluated, carry index 0.
    """
    result, indices = _march(spec, config, keep_slices=False, with_policy=True)
    assert indices is not None
    times = np.arange(result.steps, dtype=float) * result.dt
    return FeedbackPolicy(
        indices=indices, times=times, grid=config.grid, extremes=spec.uncertainty.extremes()
    )


def default_pde_config(spec: ProblemSpec, half_width: float, spacing: float, theta: float = 0.9) -> PdeConfig:
    """Config on the isotropic grid of the given spacing."""
    grid = SpatialGrid.from_spacing(half_width, spacing, spec.dimension)
    return PdeConfig(grid=grid, theta=theta)
