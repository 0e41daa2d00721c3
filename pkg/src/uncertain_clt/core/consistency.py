"""Consistency residuals of the discrete scheme against its PDE limit.

For a smooth test function phi the scheme expression

    n * max_A E[phi(t + 1/n, x + A xi / sqrt(n)) - phi(t, x)]

must converge to phi_t(t, x) + G(phi_xx(t, x)). Test functions carry their
derivatives in closed form so the residual measures the scheme alone.
"""

import logging
import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import Polynomial
from numpy.typing import NDArray

from src.uncertain_clt.core.dp_solver import unit_displacements
from src.uncertain_clt.core.g_operator import g_value
from src.uncertain_clt.core.models import NoiseModel, ResidualRow, ResidualTable, UncertaintySet

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]
PointFunction = Callable[[float, FloatArray], float]

EXACT_TOLERANCE = 1e-12
DECAY_START = 16


@dataclass(frozen=True)
class TestFunction:
    """phi(t, x) with analytic phi_t and Hessian phi_xx.

    ``increment`` optionally gives phi(t + s, x + dx) - phi(t, x) in a form
    free of cancellation; it is used in place of the plain difference.
    """

    __test__ = False  # not a pytest class

    name: str
    dimension: int
    value: PointFunction
    time_derivative: PointFunction
    hessian: Callable[[float, FloatArray], FloatArray]
    increment: Callable[[float, FloatArray, float, FloatArray], float] | None = None

    def difference(self, t: float, x: FloatArray, s: float, dx: FloatArray) -> float:
        """phi(t + s, x + dx) - phi(t, x)."""
        if self.increment is not None:
            return self.increment(t, x, s, dx)
        return self.value(t + s, x + dx) - self.value(t, x)


def affine(slope: list[float], offset: float = 0.0) -> TestFunction:
    """phi = a . x + b, constant in time."""
    a = np.asarray(slope, dtype=float)
    d = len(a)
    return TestFunction(
        name="affine",
        dimension=d,
        value=lambda t, x: float(a @ x) + offset,
        time_derivative=lambda t, x: 0.0,
        hessian=lambda t, x: np.zeros((d, d)),
        increment=lambda t, x, s, dx: float(a @ dx),
    )


def quadratic(matrix: FloatArray) -> TestFunction:
    """phi = 1/2 x^T S x, constant in time."""
    s_mat = 0.5 * (np.asarray(matrix, dtype=float) + np.asarray(matrix, dtype=float).T)
    d = s_mat.shape[0]
    return TestFunction(
        name="quadratic",
        dimension=d,
        value=lambda t, x: 0.5 * float(x @ s_mat @ x),
        time_derivative=lambda t, x: 0.0,
        hessian=lambda t, x: s_mat,
        increment=lambda t, x, s, dx: 0.5 * float((2.0 * x + dx) @ s_mat @ dx),
    )


def separable_polynomial(coefficients: list[float], dimension: int = 1) -> TestFunction:
    """phi = (1 + t) sum_r p(x_r) for a polynomial p given by increasing coefficients."""
    p = Polynomial(coefficients)
    p_prime, p_second = p.deriv(1), p.deriv(2)
    return TestFunction(
        name="separable_polynomial",
        dimension=dimension,
        value=lambda t, x: (1.0 + t) * float(np.sum(p(x))),
        time_derivative=lambda t, x: float(np.sum(p(x))),
        hessian=lambda t, x: (1.0 + t) * np.diag(p_second(x)),
    )


def cos_linear_time(dimension: int = 1) -> TestFunction:
    """phi = cos(sum x_r) (1 + t)."""
    ones = np.ones((dimension, dimension))
    return TestFunction(
        name="cos_linear_time",
        dimension=dimension,
        value=lambda t, x: math.cos(float(np.sum(x))) * (1.0 + t),
        time_derivative=lambda t, x: math.cos(float(np.sum(x))),
        hessian=lambda t, x: -math.cos(float(np.sum(x))) * (1.0 + t) * ones,
    )


def cos_exp_time(rate: float = 0.5, dimension: int = 1) -> TestFunction:
    """phi = cos(sum x_r) exp(rate (t - 1)); with rate 1/2 and d = 1 this solves the heat equation."""
    ones = np.ones((dimension, dimension))
    return TestFunction(
        name="cos_exp_time",
        dimension=dimension,
        value=lambda t, x: math.cos(float(np.sum(x))) * math.exp(rate * (t - 1.0)),
        time_derivative=lambda t, x: rate * math.cos(float(np.sum(x))) * math.exp(rate * (t - 1.0)),
        hessian=lambda t, x: -math.cos(float(np.sum(x))) * math.exp(rate * (t - 1.0)) * ones,
    )


def builtin_test_functions(dimension: int = 1) -> list[TestFunction]:
    """Default suite: affine, quadratic and the smooth non-polynomial functions."""
    return [
        affine([1.0] * dimension, 0.5),
        quadratic(np.eye(dimension)),
        separable_polynomial([0.0, 0.0, 1.0, 0.0, -0.1], dimension),
        cos_linear_time(dimension),
        cos_exp_time(0.5, dimension),
    ]


def scheme_value(
    phi: TestFunction,
    t: float,
    x: FloatArray,
    n: int,
    uncertainty: UncertaintySet,
    noise: NoiseModel,
) -> float:
    """n max_A E[phi(t + 1/n, x + A xi / sqrt(n)) - phi(t, x)] by exact quadrature."""
    displacements, weights = unit_displacements(uncertainty, noise)
    point = np.atleast_1d(np.asarray(x, dtype=float))
    scale = 1.0 / math.sqrt(n)
    step = 1.0 / n
    best = -math.inf
    for offsets in displacements:
        expectation = math.fsum(
            w * phi.difference(t, point, step, dx * scale)
            for w, dx in zip(weights, offsets, strict=True)
        )
        best = max(best, expectation)
    return n * best


def limit_value(phi: TestFunction, t: float, x: FloatArray, uncertainty: UncertaintySet) -> float:
    """phi_t(t, x) + G(phi_xx(t, x))."""
    point = np.atleast_1d(np.asarray(x, dtype=float))
    return phi.time_derivative(t, point) + g_value(phi.hessian(t, point), uncertainty)


def scheme_residual(
    phi: TestFunction,
    t: float,
    x: FloatArray,
    n: int,
    uncertainty: UncertaintySet,
    noise: NoiseModel,
) -> float:
    """|scheme expression - (phi_t + G(phi_xx))| at (t, x).

    Raises:
        UnsupportedNoiseError: For sampler-only noise
    """
    return abs(
        scheme_value(phi, t, x, n, uncertainty, noise) - limit_value(phi, t, x, uncertainty)
    )


def _decaying(residuals: list[float], n_list: list[int]) -> bool:
    """Each residual past n = 16 strictly below the previous one, or both at rounding level."""
    tail = [r for r, n in zip(residuals, n_list, strict=True) if n >= DECAY_START]
    return all(
        b < a or (a <= EXACT_TOLERANCE and b <= EXACT_TOLERANCE)
        for a, b in zip(tail, tail[1:], strict=False)
    )


def consistency_sweep(
    phi: TestFunction,
    points: list[tuple[float, FloatArray]],
    n_list: list[int],
    uncertainty: UncertaintySet,
    noise: NoiseModel,
) -> ResidualTable:
    """Residuals for every (t, x) in ``points`` and every n in ``n_list``."""
    ordered = sorted(n_list)
    rows: list[ResidualRow] = []
    for t, x in points:
        point = np.atleast_1d(np.asarray(x, dtype=float))
        residuals = [scheme_residual(phi, t, point, n, uncertainty, noise) for n in ordered]
        rows.append(
            ResidualRow(t=t, x=point.tolist(), residuals=residuals, decaying=_decaying(residuals, ordered))
        )
    table = ResidualTable(test_function=phi.name, n_list=ordered, rows=rows)
    logger.debug("consistency %s: max residual %.3g", phi.name, table.max_residual)
    return table


def drifting_sweep(
    phi: TestFunction,
    t_bar: float,
    x_bar: FloatArray,
    n_list: list[int],
    uncertainty: UncertaintySet,
    noise: NoiseModel,
    alpha: float = 1.0,
    beta: float | FloatArray = 1.0,
) -> ResidualTable:
    """Scheme at (t_bar + alpha / n, x_bar + beta / sqrt(n)) against the limit at (t_bar, x_bar).

    The evaluation point drifts toward (t_bar, x_bar) as n grows, so the
    residual measures convergence along a sequence rather than at a point.
    """
    ordered = sorted(n_list)
    anchor = np.atleast_1d(np.asarray(x_bar, dtype=float))
    shift = np.broadcast_to(np.asarray(beta, dtype=float), anchor.shape)
    target = limit_value(phi, t_bar, anchor, uncertainty)
    residuals = [
        abs(
            scheme_value(phi, t_bar + alpha / n, anchor + shift / math.sqrt(n), n, uncertainty, noise)
            - target
        )
        for n in ordered
    ]
    row = ResidualRow(
        t=t_bar, x=anchor.tolist(), residuals=residuals, decaying=_decaying(residuals, ordered)
    )
    return ResidualTable(test_function=f"{phi.name} (drifting)", n_list=ordered, rows=[row])
