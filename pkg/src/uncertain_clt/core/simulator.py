"""Forward Monte Carlo of the controlled walk.

Rolls X_{j+1} = X_j + A_j xi_{j+1} / sqrt(n) from X_0 = 0 with A_j chosen by
a feedback policy, a fixed matrix, or uniformly at random among the extreme
matrices, and estimates E f(X_n).

Paths are split into chunks, each with its own Philox stream spawned from
the root seed; chunk statistics are merged in chunk order, so an estimate
depends on (seed, paths, chunk_size) only.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src.uncertain_clt.core.dp_solver import dp_solve
from src.uncertain_clt.core.errors import DimensionMismatchError, PolicyMismatchError
from src.uncertain_clt.core.grid import FeedbackPolicy
from src.uncertain_clt.core.models import (
    EulerReport,
    EulerRow,
    McEstimate,
    NoiseModel,
    Payoff,
    ProblemSpec,
    SimConfig,
    StrategyKind,
)
from src.uncertain_clt.core.problem import validate
from src.uncertain_clt.utils.parallel import ordered_map
from src.uncertain_clt.utils.seed import spawn_generators

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

CLASSICAL_QUADRATURE_ORDER = 20


@dataclass(frozen=True)
class _ChunkStats:
    count: int
    mean: float
    m2: float  # sum of squared deviations from the chunk mean


def _merge(a: _ChunkStats, b: _ChunkStats) -> _ChunkStats:
    """Pairwise update of count, mean and M2 (Chan et al.)."""
    count = a.count + b.count
    delta = b.mean - a.mean
    mean = a.mean + delta * b.count / count
    m2 = a.m2 + b.m2 + delta * delta * a.count * b.count / count
    return _ChunkStats(count, mean, m2)


def _check_strategy(spec: ProblemSpec, sim: SimConfig) -> list[FloatArray]:
    """Matrices the strategy may pick from.

    Raises:
        PolicyMismatchError: If the policy or fixed matrix does not fit the run
    """
    extremes = spec.uncertainty.extremes()
    if sim.strategy == StrategyKind.FEEDBACK:
        policy = sim.policy
        if policy is None:
            raise PolicyMismatchError("Feedback strategy needs a policy")
        if policy.steps != sim.n:
            raise PolicyMismatchError(f"Policy has {policy.steps} steps, simulation has n={sim.n}")
        if policy.grid.dimension != spec.dimension:
            raise PolicyMismatchError(
                f"Policy grid has d={policy.grid.dimension}, problem has d={spec.dimension}"
            )
        if len(policy.extremes) != len(extremes) or not all(
            np.allclose(a, b) for a, b in zip(policy.extremes, extremes, strict=True)
        ):
            raise PolicyMismatchError("Policy was extracted for another uncertainty set")
        return extremes
    if sim.strategy == StrategyKind.FIXED_MATRIX:
        if sim.matrix is None:
            raise PolicyMismatchError("Fixed-matrix strategy needs a matrix")
        matrix = np.array(sim.matrix, dtype=float)
        if not spec.uncertainty.contains(matrix, tol=1e-9):
            raise PolicyMismatchError(f"Matrix {sim.matrix} is not in the uncertainty set")
        return [matrix]
    return extremes


def _simulate_chunk(
    spec: ProblemSpec,
    sim: SimConfig,
    matrices: FloatArray,
    rng: np.random.Generator,
    size: int,
) -> _ChunkStats:
    d = spec.dimension
    scale = 1.0 / math.sqrt(sim.n)
    x = np.zeros((size, d))
    for j in range(sim.n):
        xi = spec.noise.sample(rng, size)
        if sim.strategy == StrategyKind.FEEDBACK:
            assert sim.policy is not None
            chosen = matrices[sim.policy.indices_at(j, x)]
            x += np.einsum("prl,pl->pr", chosen, xi) * scale
        elif sim.strategy == StrategyKind.RANDOMIZED_SCAN:
            chosen = matrices[rng.integers(0, len(matrices), size=size)]
            x += np.einsum("prl,pl->pr", chosen, xi) * scale
        else:
            x += xi @ matrices[0].T * scale
    values = spec.payoff.evaluate(x)
    mean = float(values.mean())
    return _ChunkStats(size, mean, float(np.sum((values - mean) ** 2)))


def simulate(spec: ProblemSpec, sim: SimConfig, workers: int | None = None) -> McEstimate:
    """Estimate E f(X_n) under the configured strategy.

    Args:
        spec: Problem (sampler-only noise allowed)
        sim: Paths, seed, n and strategy
        workers: Thread count; defaults to ``UCLT_THREADS`` or the CPU count

    Returns:
        Mean and standard error of f(X_n)

    Raises:
        PolicyMismatchError: If the strategy does not fit the problem or n
    """
    validate(spec)
    matrices = np.stack(_check_strategy(spec, sim))
    chunks = math.ceil(sim.paths / sim.chunk_size)
    sizes = [min(sim.chunk_size, sim.paths - k * sim.chunk_size) for k in range(chunks)]
    generators = spawn_generators(sim.seed, chunks)

    stats = ordered_map(
        lambda job: _simulate_chunk(spec, sim, matrices, job[0], job[1]),
        list(zip(generators, sizes, strict=True)),
        workers,
    )
    total = stats[0]
    for chunk in stats[1:]:
        total = _merge(total, chunk)
    variance = total.m2 / (total.count - 1) if total.count > 1 else 0.0
    estimate = McEstimate(
        mean=total.mean, stderr=math.sqrt(variance / total.count), paths=total.count
    )
    logger.debug(
        "simulate %s n=%d strategy=%s paths=%d -> %.6g +- %.2g",
        spec.name,
        sim.n,
        sim.strategy.value,
        sim.paths,
        estimate.mean,
        estimate.stderr,
    )
    return estimate


def classical_limit(payoff: Payoff, matrix: FloatArray, order: int = CLASSICAL_QUADRATURE_ORDER) -> float:
    """E f(A eta) for a standard normal eta, by tensorized Gauss-Hermite quadrature.

    This is the limit for the constant strategy A, a lower bound of the
    value under uncertainty for every member A of the set.
    """
    a = np.atleast_2d(np.asarray(matrix, dtype=float))
    if a.shape != (payoff.dimension, payoff.dimension):
        raise DimensionMismatchError(f"Matrix is {a.shape}, payoff has d={payoff.dimension}")
    points, weights = NoiseModel.gauss_hermite(order, payoff.dimension).nodes()
    return float(weights @ payoff.evaluate(points @ a.T))


def policy_for(spec: ProblemSpec, n: int) -> FeedbackPolicy:
    """Feedback policy from the DP; sampler-only noise is replaced by Gauss-Hermite for the solve."""
    solve_spec = spec if spec.noise.has_nodes else spec.with_noise(
        NoiseModel.gauss_hermite(dimension=spec.dimension)
    )
    return dp_solve(solve_spec, n, keep_slices=False).policy


def euler_compare(
    spec: ProblemSpec,
    n: int | list[int],
    paths: int = 100_000,
    seed: int = 20240101,
    workers: int | None = None,
) -> EulerReport:
    """Same feedback policy simulated with the spec's noise and with Gaussian increments.

    Args:
        spec: Problem to solve
        n: One step count or a list of them
        paths: Paths per estimate
        seed: Root seed, shared by both runs
        workers: Thread count

    Returns:
        One row per n with both estimates and their difference
    """
    n_list = [n] if isinstance(n, int) else sorted(n)
    gaussian_spec = spec.with_noise(spec.noise.gaussian_counterpart())
    rows: list[EulerRow] = []
    for steps in n_list:
        sim = SimConfig(paths=paths, seed=seed, n=steps, policy=policy_for(spec, steps))
        native = simulate(spec, sim, workers)
        gaussian = simulate(gaussian_spec, sim, workers)
        rows.append(
            EulerRow(
                n=steps,
                native=native,
                gaussian=gaussian,
                difference=native.mean - gaussian.mean,
                combined_stderr=math.hypot(native.stderr, gaussian.stderr),
            )
        )
        logger.info(
            "euler n=%d: native %.5f, gaussian %.5f", steps, native.mean, gaussian.mean
        )
    return EulerReport(
        spec_name=spec.name,
        rows=rows,
        config={"n": n_list, "paths": paths, "seed": seed, "spec": spec.model_dump(mode="json")},
    )
