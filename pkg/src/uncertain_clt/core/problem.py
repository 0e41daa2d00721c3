"""Standing assumptions of a problem: dimensions, moment conditions, payoff bound.

``validate`` produces a report with measured defects and raises on hard
errors before any solver runs.
"""

import logging

import numpy as np
from numpy.typing import NDArray

from src.uncertain_clt.core.errors import (
    DimensionMismatchError,
    MomentConditionError,
    PayoffBoundError,
)
from src.uncertain_clt.core.models import (
    NoiseModel,
    ProblemSpec,
    UncertaintySet,
    ValidationReport,
)

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

DOMAIN_SIGMAS = 6.0
MOMENT_SAMPLE_SIZE = 1_000_000
PAYOFF_SAMPLE_SIZE = 4096


def enumerate_extremes(uncertainty: UncertaintySet) -> list[FloatArray]:
    """Finite list whose max of any function linear in A A^T equals the sup over the set."""
    return uncertainty.extremes()


def default_half_width(uncertainty: UncertaintySet) -> float:
    """Computational domain half-width R = 6 sigma_max."""
    return DOMAIN_SIGMAS * uncertainty.sigma_max


def moment_defects(noise: NoiseModel, seed: int = 0) -> tuple[float, float, float, bool]:
    """Mean defect, covariance defect, weight defect and whether they were sampled.

    Exact summation over nodes when available, an empirical check on a
    seeded sample otherwise.
    """
    d = noise.dimension
    if noise.has_nodes:
        points, weights = noise.nodes()
        mean = weights @ points
        cov = np.einsum("k,kr,kl->rl", weights, points, points)
        weight_defect = abs(float(weights.sum()) - 1.0)
        sampled = False
    else:
        sample = noise.sample(np.random.default_rng(seed), MOMENT_SAMPLE_SIZE)
        mean = sample.mean(axis=0)
        cov = sample.T @ sample / len(sample)
        weight_defect = 0.0
        sampled = True
    mean_defect = float(np.max(np.abs(mean)))
    covariance_defect = float(np.max(np.abs(cov - np.eye(d))))
    return mean_defect, covariance_defect, weight_defect, sampled


def validate(
    spec: ProblemSpec,
    half_widths: list[float] | None = None,
    seed: int = 0,
    strict: bool = True,
) -> ValidationReport:
    """Check dimensions, the moment conditions on the noise and the payoff bound.

    Args:
        spec: Problem to check
        half_widths: Computational domain; defaults to 6 sigma_max per axis
        seed: Seed for the payoff sample and empirical moment checks
        strict: Raise on hard errors (dimension mismatch, moment defect,
            payoff above its bound)

    Returns:
        Report with measured defects

    Raises:
        DimensionMismatchError: If uncertainty, noise and payoff disagree on d
        MomentConditionError: If a moment defect exceeds the tolerance
        PayoffBoundError: If |f| exceeds the bound M somewhere on the domain
    """
    d = spec.uncertainty.dimension
    dims = {"uncertainty": d, "noise": spec.noise.dimension, "payoff": spec.payoff.dimension}
    dimension_ok = len(set(dims.values())) == 1
    if not dimension_ok and strict:
        raise DimensionMismatchError(f"Dimensions disagree: {dims}")

    widths = half_widths or [default_half_width(spec.uncertainty)] * d
    bound = spec.payoff.resolve_bound(widths)

    mean_defect: float | None = None
    covariance_defect: float | None = None
    weight_defect: float | None = None
    sampled = False
    payoff_max = 0.0
    violations = 0
    if dimension_ok:
        mean_defect, covariance_defect, weight_defect, sampled = moment_defects(spec.noise, seed)
        rng = np.random.default_rng(seed)
        lo = -np.asarray(widths)
        corners = np.array(np.meshgrid(*[[-w, 0.0, w] for w in widths], indexing="ij"))
        sample_points = np.concatenate(
            [rng.uniform(lo, -lo, size=(PAYOFF_SAMPLE_SIZE, d)), corners.reshape(d, -1).T]
        )
        values = np.abs(spec.payoff.evaluate(sample_points))
        payoff_max = float(values.max())
        violations = int(np.sum(values > bound * (1.0 + 1e-12)))

    report = ValidationReport(
        dimension_ok=dimension_ok,
        mean_defect=mean_defect,
        covariance_defect=covariance_defect,
        weight_defect=weight_defect,
        moment_tolerance=spec.noise.tolerance,
        payoff_bound=bound,
        payoff_max_sampled=payoff_max,
        payoff_violations=violations,
        sampled=sampled,
    )
    logger.debug("Validated %s: %s", spec.name, report.model_dump())

    if strict and dimension_ok and not report.moments_ok:
        raise MomentConditionError(
            f"Noise violates E xi = 0, E xi xi^T = I: mean defect {mean_defect:.3g}, "
            f"covariance defect {covariance_defect:.3g} (tolerance {report.moment_tolerance:.1g})"
        )
    if strict and violations > 0:
        raise PayoffBoundError(
            f"Payoff exceeds its bound M = {bound:.6g} at {violations} sampled points "
            f"(max |f| = {payoff_max:.6g})"
        )
    return report
