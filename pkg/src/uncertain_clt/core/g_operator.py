"""The nonlinearity G(S) = 1/2 sup_{A in Lambda} Tr(A A^T S) and its maximizer.

The sup is linear in A A^T, so it is attained at the extreme matrices of the
uncertainty set and evaluated by exact enumeration.
"""

from dataclasses import dataclass

import numpy as np
from numpy.typing import NDArray

from src.uncertain_clt.core.errors import DimensionMismatchError
from src.uncertain_clt.core.models import UncertaintySet

FloatArray = NDArray[np.float64]


@dataclass(frozen=True)
class SymMatrix:
    """Symmetric d x d matrix stored as its upper triangle (row-major)."""

    dimension: int
    upper: tuple[float, ...]

    def __post_init__(self) -> None:
        """Check the triangle length."""
        expected = self.dimension * (self.dimension + 1) // 2
        if len(self.upper) != expected:
            raise ValueError(f"Upper triangle of a {self.dimension}x{self.dimension} matrix has {expected} entries")

    @classmethod
    def from_full(cls, matrix: FloatArray) -> "SymMatrix":
        """Symmetrize a square matrix and keep its upper triangle."""
        m = np.atleast_2d(np.asarray(matrix, dtype=float))
        if m.shape[0] != m.shape[1]:
            raise ValueError(f"Expected a square matrix, got shape {m.shape}")
        sym = 0.5 * (m + m.T)
        rows, cols = np.triu_indices(m.shape[0])
        return cls(dimension=m.shape[0], upper=tuple(float(v) for v in sym[rows, cols]))

    @classmethod
    def scalar(cls, s: float) -> "SymMatrix":
        """1 x 1 matrix."""
        return cls(dimension=1, upper=(float(s),))

    def full(self) -> FloatArray:
        """Dense symmetric matrix."""
        m = np.zeros((self.dimension, self.dimension))
        rows, cols = np.triu_indices(self.dimension)
        m[rows, cols] = self.upper
        m[cols, rows] = self.upper
        return m


def _as_matrix(s: SymMatrix | FloatArray | float) -> FloatArray:
    if isinstance(s, SymMatrix):
        return s.full()
    m = np.atleast_2d(np.asarray(s, dtype=float))
    return 0.5 * (m + m.T)


def candidate_values(s: SymMatrix | FloatArray | float, uncertainty: UncertaintySet) -> FloatArray:
    """1/2 Tr(A A^T S) for every extreme matrix, in enumeration order."""
    m = _as_matrix(s)
    if m.shape != (uncertainty.dimension, uncertainty.dimension):
        raise DimensionMismatchError(
            f"S is {m.shape[0]}x{m.shape[1]} but the uncertainty set has d={uncertainty.dimension}"
        )
    return np.array([0.5 * float(np.sum(c * m)) for c in uncertainty.covariances()])


def g_value(s: SymMatrix | FloatArray | float, uncertainty: UncertaintySet) -> float:
    """G(S) by enumeration of the extreme matrices."""
    return float(np.max(candidate_values(s, uncertainty)))


def g_argmax_index(s: SymMatrix | FloatArray | float, uncertainty: UncertaintySet) -> int:
    """Enumeration index of the maximizer; ties go to the lowest index."""
    return int(np.argmax(candidate_values(s, uncertainty)))


def g_argmax(s: SymMatrix | FloatArray | float, uncertainty: UncertaintySet) -> FloatArray:
    """Extreme matrix A* attaining G(S)."""
    return uncertainty.extremes()[g_argmax_index(s, uncertainty)]


def g_closed_form_1d(s: float, sigma_lo: float, sigma_hi: float) -> float:
    """G(s) = 1/2 (sigma_hi^2 s^+ - sigma_lo^2 s^-) for the scalar band."""
    return 0.5 * (sigma_hi**2 * max(s, 0.0) - sigma_lo**2 * max(-s, 0.0))
