"""Domain models for the uncertain-transformation CLT.

This module defines the Pydantic models describing a problem (uncertainty set,
noise law, payoff), solver configurations and the reports produced by the
experiments. Numeric containers holding large arrays live in ``core.grid``.
"""

import itertools
import math
from enum import Enum
from typing import Any

import numpy as np
from numpy.polynomial.hermite_e import hermegauss
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy.interpolate import RegularGridInterpolator

from src.uncertain_clt.core.grid import FeedbackPolicy, SpatialGrid

FloatArray = NDArray[np.float64]

ATOM_MOMENT_TOLERANCE = 1e-10
SAMPLED_MOMENT_TOLERANCE = 1e-2


class UncertaintyKind(str, Enum):
    """Shape of the compact matrix set the adversary draws from."""

    FINITE_SET = "finite_set"
    SCALAR_INTERVAL = "scalar_interval"
    DIAGONAL_BOX = "diagonal_box"


class NoiseKind(str, Enum):
    """How the law of the innovations is represented."""

    ATOMS = "atoms"
    GAUSS_HERMITE = "gauss_hermite"
    SAMPLER = "sampler"


class SamplerLaw(str, Enum):
    """Unit-variance laws available to sampler-only noise."""

    GAUSSIAN = "gaussian"
    UNIFORM = "uniform"
    LAPLACE = "laplace"
    RADEMACHER = "rademacher"


class PayoffKind(str, Enum):
    """Built-in terminal functions."""

    COSINE = "cosine"  # cos(sum x_r)
    QUADRATIC = "quadratic"  # |x|^2
    NEG_QUADRATIC = "neg_quadratic"  # -|x|^2
    GAUSSIAN_BUMP = "gaussian_bump"  # exp(-|x|^2)
    COORDINATE = "coordinate"  # x_1 clipped to [-clip, clip]
    TABULATED = "tabulated"


class StrategyKind(str, Enum):
    """Adversary strategy used by the Monte Carlo simulator."""

    FEEDBACK = "feedback"
    FIXED_MATRIX = "fixed_matrix"
    RANDOMIZED_SCAN = "randomized_scan"


class UncertaintySet(BaseModel):
    """The compact set of d x d matrices A the adversary chooses from."""

    model_config = ConfigDict(frozen=True)

    kind: UncertaintyKind
    dimension: int = Field(..., ge=1)
    matrices: list[list[list[float]]] | None = None
    sigma_lo: float | None = None
    sigma_hi: float | None = None
    box: list[tuple[float, float]] | None = None

    def model_post_init(self, __context: object) -> None:
        """Validate the variant-specific fields."""
        d = self.dimension
        if self.kind == UncertaintyKind.FINITE_SET:
            if not self.matrices:
                raise ValueError("Finite uncertainty set needs at least one matrix")
            for k, matrix in enumerate(self.matrices):
                if len(matrix) != d or any(len(row) != d for row in matrix):
                    raise ValueError(f"Matrix {k} is not {d}x{d}")
        elif self.kind == UncertaintyKind.SCALAR_INTERVAL:
            if self.sigma_lo is None or self.sigma_hi is None:
                raise ValueError("Scalar interval needs sigma_lo and sigma_hi")
            if not 0 < self.sigma_lo <= self.sigma_hi:
                raise ValueError(
                    f"Scalar interval requires 0 < sigma_lo <= sigma_hi, "
                    f"got [{self.sigma_lo}, {self.sigma_hi}]"
                )
        elif self.kind == UncertaintyKind.DIAGONAL_BOX:
            if self.box is None or len(self.box) != d:
                raise ValueError(f"Diagonal box needs {d} per-axis intervals")
            for r, (lo, hi) in enumerate(self.box):
                if not 0 < lo <= hi:
                    raise ValueError(f"Axis {r}: box requires 0 < lo <= hi, got [{lo}, {hi}]")

    @classmethod
    def finite_set(cls, matrices: list[Any]) -> "UncertaintySet":
        """Build a finite set from a list of square matrices (nested lists or arrays)."""
        as_lists = [np.atleast_2d(np.asarray(m, dtype=float)).tolist() for m in matrices]
        return cls(kind=UncertaintyKind.FINITE_SET, dimension=len(as_lists[0]), matrices=as_lists)

    @classmethod
    def scalar_interval(
        cls, sigma_lo: float, sigma_hi: float, dimension: int = 1
    ) -> "UncertaintySet":
        """Build the band {sigma * I : sigma in [sigma_lo, sigma_hi]}."""
        return cls(
            kind=UncertaintyKind.SCALAR_INTERVAL,
            dimension=dimension,
            sigma_lo=sigma_lo,
            sigma_hi=sigma_hi,
        )

    @classmethod
    def diagonal_box(cls, box: list[tuple[float, float]]) -> "UncertaintySet":
        """Build the set of diagonal matrices with entries in per-axis intervals."""
        return cls(kind=UncertaintyKind.DIAGONAL_BOX, dimension=len(box), box=list(box))

    def extremes(self) -> list[FloatArray]:
        """Canonical enumeration of the extreme matrices.

        Finite sets enumerate their list. Interval and box variants enumerate
        {lo, hi} per axis in lexicographic order (lo first).
        """
        d = self.dimension
        if self.kind == UncertaintyKind.FINITE_SET:
            assert self.matrices is not None
            return [np.array(m, dtype=float) for m in self.matrices]
        if self.kind == UncertaintyKind.SCALAR_INTERVAL:
            assert self.sigma_lo is not None and self.sigma_hi is not None
            sigmas = _distinct([self.sigma_lo, self.sigma_hi])
            return [s * np.eye(d) for s in sigmas]
        assert self.box is not None
        per_axis = [_distinct([lo, hi]) for lo, hi in self.box]
        return [np.diag(np.array(corner, dtype=float)) for corner in itertools.product(*per_axis)]

    def contains(self, matrix: FloatArray, tol: float = 1e-12) -> bool:
        """Check membership of a matrix in the set."""
        a = np.asarray(matrix, dtype=float)
        d = self.dimension
        if a.shape != (d, d):
            return False
        if self.kind == UncertaintyKind.FINITE_SET:
            return any(np.allclose(a, m, atol=tol, rtol=0.0) for m in self.extremes())
        off_diagonal = a - np.diag(np.diag(a))
        if np.max(np.abs(off_diagonal), initial=0.0) > tol:
            return False
        diag = np.diag(a)
        if self.kind == UncertaintyKind.SCALAR_INTERVAL:
            assert self.sigma_lo is not None and self.sigma_hi is not None
            return bool(
                np.allclose(diag, diag[0], atol=tol, rtol=0.0)
                and self.sigma_lo - tol <= diag[0] <= self.sigma_hi + tol
            )
        assert self.box is not None
        return all(lo - tol <= v <= hi + tol for v, (lo, hi) in zip(diag, self.box, strict=True))

    def sample(self, rng: np.random.Generator, count: int) -> list[FloatArray]:
        """Draw matrices from the set (uniform on intervals/boxes, uniform index for finite sets)."""
        d = self.dimension
        if self.kind == UncertaintyKind.FINITE_SET:
            members = self.extremes()
            return [members[i] for i in rng.integers(0, len(members), size=count)]
        if self.kind == UncertaintyKind.SCALAR_INTERVAL:
            assert self.sigma_lo is not None and self.sigma_hi is not None
            return [s * np.eye(d) for s in rng.uniform(self.sigma_lo, self.sigma_hi, size=count)]
        assert self.box is not None
        lo = np.array([b[0] for b in self.box])
        hi = np.array([b[1] for b in self.box])
        return [np.diag(row) for row in rng.uniform(lo, hi, size=(count, d))]

    def covariances(self) -> list[FloatArray]:
        """A A^T for every extreme matrix."""
        return [a @ a.T for a in self.extremes()]

    @property
    def sigma_max(self) -> float:
        """Largest spectral norm among the extreme matrices."""
        return max(float(np.linalg.norm(a, ord=2)) for a in self.extremes())

    @property
    def lambda_max(self) -> float:
        """Largest eigenvalue of A A^T among the extreme matrices."""
        return max(float(np.linalg.eigvalsh(c)[-1]) for c in self.covariances())

    def rotated(self, orthogonal: FloatArray) -> "UncertaintySet":
        """The finite set {A O : A extreme}, same covariances A O O^T A^T = A A^T."""
        o = np.asarray(orthogonal, dtype=float)
        return UncertaintySet.finite_set([a @ o for a in self.extremes()])


def _distinct(values: list[float]) -> list[float]:
    """Drop a repeated endpoint of a degenerate interval, keeping order."""
    return values[:1] if values[0] == values[1] else values


class NoiseModel(BaseModel):
    """Law of the innovations xi: mean zero, identity covariance."""

    model_config = ConfigDict(frozen=True)

    kind: NoiseKind
    dimension: int = Field(..., ge=1)
    points: list[list[float]] | None = None
    weights: list[float] | None = None
    order: int | None = Field(default=None, ge=1, le=40)
    law: SamplerLaw | None = None
    moment_tolerance: float | None = Field(default=None, gt=0)

    def model_post_init(self, __context: object) -> None:
        """Validate the variant-specific fields."""
        if self.kind == NoiseKind.ATOMS:
            if not self.points or self.weights is None:
                raise ValueError("Atom noise needs points and weights")
            if len(self.points) != len(self.weights):
                raise ValueError(
                    f"{len(self.points)} points but {len(self.weights)} weights given"
                )
            if any(len(p) != self.dimension for p in self.points):
                raise ValueError(f"Every atom must have {self.dimension} coordinates")
            if any(w <= 0 for w in self.weights):
                raise ValueError("Atom weights must be positive")
            if abs(math.fsum(self.weights) - 1.0) > 1e-12:
                raise ValueError(f"Atom weights sum to {math.fsum(self.weights)}, expected 1")
        elif self.kind == NoiseKind.GAUSS_HERMITE:
            if self.order is None:
                raise ValueError("Gauss-Hermite noise needs an order")
        elif self.law is None:
            raise ValueError("Sampler noise needs a law")

    @classmethod
    def atoms(cls, points: list[Any], weights: list[float]) -> "NoiseModel":
        """Discrete law from explicit atoms and weights."""
        pts = [np.atleast_1d(np.asarray(p, dtype=float)).tolist() for p in points]
        return cls(kind=NoiseKind.ATOMS, dimension=len(pts[0]), points=pts, weights=list(weights))

    @classmethod
    def product(
        cls, points_1d: list[float], weights_1d: list[float], dimension: int = 1
    ) -> "NoiseModel":
        """Independent coordinates, each distributed as the given 1-d atoms."""
        grids = itertools.product(range(len(points_1d)), repeat=dimension)
        points: list[list[float]] = []
        weights: list[float] = []
        for idx in grids:
            points.append([points_1d[i] for i in idx])
            weights.append(math.prod(weights_1d[i] for i in idx))
        return cls(kind=NoiseKind.ATOMS, dimension=dimension, points=points, weights=weights)

    @classmethod
    def rademacher(cls, dimension: int = 1) -> "NoiseModel":
        """Independent +-1 coordinates with probability 1/2 each."""
        return cls.product([1.0, -1.0], [0.5, 0.5], dimension)

    @classmethod
    def two_point(cls, a: float = 2.0, dimension: int = 1) -> "NoiseModel":
        """Asymmetric two-point law: atoms a and -1/a, weights 1/(1+a^2) and a^2/(1+a^2)."""
        if a <= 0:
            raise ValueError("two_point needs a > 0")
        p = 1.0 / (1.0 + a * a)
        return cls.product([a, -1.0 / a], [p, 1.0 - p], dimension)

    @classmethod
    def gauss_hermite(cls, order: int = 7, dimension: int = 1) -> "NoiseModel":
        """Standard normal law discretized by tensorized Gauss-Hermite quadrature."""
        return cls(kind=NoiseKind.GAUSS_HERMITE, dimension=dimension, order=order)

    @classmethod
    def sampler(cls, law: SamplerLaw, dimension: int = 1) -> "NoiseModel":
        """Sampling-only law, usable by Monte Carlo but not by quadrature solvers."""
        return cls(kind=NoiseKind.SAMPLER, dimension=dimension, law=law)

    @property
    def has_nodes(self) -> bool:
        """Whether the law is available as weighted nodes."""
        return self.kind != NoiseKind.SAMPLER

    @property
    def tolerance(self) -> float:
        """Moment tolerance, defaulting by construction method."""
        if self.moment_tolerance is not None:
            return self.moment_tolerance
        if self.kind == NoiseKind.SAMPLER:
            return SAMPLED_MOMENT_TOLERANCE
        return ATOM_MOMENT_TOLERANCE

    def nodes(self) -> tuple[FloatArray, FloatArray]:
        """Points of shape (K, d) and weights of shape (K,).

        Raises:
            ValueError: For sampler-only noise (no nodes)
        """
        if self.kind == NoiseKind.ATOMS:
            assert self.points is not None and self.weights is not None
            return np.array(self.points, dtype=float), np.array(self.weights, dtype=float)
        if self.kind == NoiseKind.GAUSS_HERMITE:
            assert self.order is not None
            x, w = hermegauss(self.order)
            w = w / w.sum()
            mesh = np.meshgrid(*([x] * self.dimension), indexing="ij")
            points = np.stack([m.ravel() for m in mesh], axis=-1)
            weights = np.ones(1)
            for _ in range(self.dimension):
                weights = np.kron(weights, w)
            return points, weights
        raise ValueError("Sampler-only noise has no quadrature nodes")

    def sample(self, rng: np.random.Generator, size: int) -> FloatArray:
        """Draw ``size`` independent innovations, shape (size, d)."""
        d = self.dimension
        if self.kind == NoiseKind.ATOMS:
            points, weights = self.nodes()
            return points[rng.choice(len(weights), size=size, p=weights)]
        if self.kind == NoiseKind.GAUSS_HERMITE or self.law == SamplerLaw.GAUSSIAN:
            return rng.standard_normal((size, d))
        if self.law == SamplerLaw.UNIFORM:
            return rng.uniform(-math.sqrt(3.0), math.sqrt(3.0), size=(size, d))
        if self.law == SamplerLaw.LAPLACE:
            return rng.laplace(0.0, 1.0 / math.sqrt(2.0), size=(size, d))
        return rng.choice(np.array([-1.0, 1.0]), size=(size, d))

    def gaussian_counterpart(self) -> "NoiseModel":
        """Sampling-only standard normal law of the same dimension."""
        return NoiseModel.sampler(SamplerLaw.GAUSSIAN, self.dimension)


class Payoff(BaseModel):
    """Terminal function f with an explicit bound M on the computational domain."""

    model_config = ConfigDict(frozen=True)

    kind: PayoffKind
    dimension: int = Field(..., ge=1)
    bound: float | None = Field(default=None, gt=0)
    lipschitz: float | None = Field(default=None, ge=0)
    clip: float = Field(default=6.0, gt=0)
    axes: list[list[float]] | None = None
    values: list[Any] | None = None

    def model_post_init(self, __context: object) -> None:
        """Validate tabulated payoffs."""
        if self.kind != PayoffKind.TABULATED:
            return
        if self.axes is None or self.values is None:
            raise ValueError("Tabulated payoff needs axes and values")
        if len(self.axes) != self.dimension:
            raise ValueError(f"Tabulated payoff needs {self.dimension} axes")
        for axis in self.axes:
            if len(axis) < 2 or any(b <= a for a, b in itertools.pairwise(axis)):
                raise ValueError("Table axes must be strictly increasing with >= 2 entries")
        table = np.asarray(self.values, dtype=float)
        if table.shape != tuple(len(a) for a in self.axes):
            raise ValueError(f"Table shape {table.shape} does not match axes")

    @classmethod
    def builtin(cls, kind: PayoffKind, dimension: int = 1, **kwargs: Any) -> "Payoff":
        """Build one of the closed-form payoffs."""
        return cls(kind=kind, dimension=dimension, **kwargs)

    @classmethod
    def tabulated(cls, axes: list[list[float]], values: Any) -> "Payoff":
        """Piecewise-multilinear payoff, constant outside its table."""
        return cls(
            kind=PayoffKind.TABULATED,
            dimension=len(axes),
            axes=axes,
            values=np.asarray(values, dtype=float).tolist(),
        )

    def evaluate(self, points: FloatArray) -> FloatArray:
        """Evaluate f at points of shape (..., d)."""
        x = np.asarray(points, dtype=float)
        if self.kind == PayoffKind.COSINE:
            return np.cos(x.sum(axis=-1))
        if self.kind == PayoffKind.QUADRATIC:
            return np.sum(x * x, axis=-1)
        if self.kind == PayoffKind.NEG_QUADRATIC:
            return -np.sum(x * x, axis=-1)
        if self.kind == PayoffKind.GAUSSIAN_BUMP:
            return np.exp(-np.sum(x * x, axis=-1))
        if self.kind == PayoffKind.COORDINATE:
            return np.clip(x[..., 0], -self.clip, self.clip)
        assert self.axes is not None
        axes = [np.asarray(a) for a in self.axes]
        clamped = np.stack(
            [np.clip(x[..., r], a[0], a[-1]) for r, a in enumerate(axes)], axis=-1
        )
        interpolator = RegularGridInterpolator(axes, np.asarray(self.values, dtype=float))
        return np.asarray(interpolator(clamped), dtype=float)

    def resolve_bound(self, half_widths: list[float]) -> float:
        """M: the explicit bound, else max |f| over the box prod [-R_r, R_r]."""
        if self.bound is not None:
            return self.bound
        if self.kind in (PayoffKind.COSINE, PayoffKind.GAUSSIAN_BUMP):
            return 1.0
        if self.kind in (PayoffKind.QUADRATIC, PayoffKind.NEG_QUADRATIC):
            return float(sum(r * r for r in half_widths))
        if self.kind == PayoffKind.COORDINATE:
            return min(self.clip, half_widths[0])
        return float(np.max(np.abs(np.asarray(self.values, dtype=float))))


class ProblemSpec(BaseModel):
    """Inputs of the limit: uncertainty set, noise law and payoff on the horizon [0, 1]."""

    model_config = ConfigDict(frozen=True)

    name: str = "problem"
    uncertainty: UncertaintySet
    noise: NoiseModel
    payoff: Payoff

    @property
    def dimension(self) -> int:
        """State dimension d."""
        return self.uncertainty.dimension

    def time_points(self, n: int) -> FloatArray:
        """t_j = j / n for j = 0..n."""
        return np.arange(n + 1, dtype=float) / n

    def with_uncertainty(self, uncertainty: UncertaintySet) -> "ProblemSpec":
        """Copy with another uncertainty set."""
        return self.model_copy(update={"uncertainty": uncertainty})

    def with_noise(self, noise: NoiseModel) -> "ProblemSpec":
        """Copy with another noise law."""
        return self.model_copy(update={"noise": noise})

    def with_payoff(self, payoff: Payoff) -> "ProblemSpec":
        """Copy with another payoff."""
        return self.model_copy(update={"payoff": payoff})


class ValidationReport(BaseModel):
    """Outcome of checking the standing assumptions of a problem."""

    dimension_ok: bool = True
    mean_defect: float | None = None  # max_r |sum p_k z_k|_r
    covariance_defect: float | None = None  # max |sum p_k z_k z_k^T - I|
    weight_defect: float | None = None  # |sum p_k - 1|
    moment_tolerance: float
    payoff_bound: float
    payoff_max_sampled: float
    payoff_violations: int = 0
    sampled: bool = False  # moments measured on a sample rather than exactly

    @property
    def moments_ok(self) -> bool:
        """Whether mean and covariance defects are within tolerance."""
        if self.mean_defect is None or self.covariance_defect is None:
            return False
        return (
            self.mean_defect <= self.moment_tolerance
            and self.covariance_defect <= self.moment_tolerance
        )

    @property
    def passed(self) -> bool:
        """Whether every invariant holds."""
        return self.dimension_ok and self.moments_ok and self.payoff_violations == 0


class PdeConfig(BaseModel):
    """Discretization of the G-heat terminal-value problem."""

    model_config = ConfigDict(frozen=True)

    grid: SpatialGrid
    dt: float | None = Field(default=None, gt=0)  # None: largest 1/N below theta * CFL
    theta: float = Field(default=0.9, gt=0, le=1)


class SimConfig(BaseModel):
    """Monte Carlo run description."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    paths: int = Field(default=100_000, ge=1)
    seed: int = Field(default=20240101, ge=0, lt=2**64)
    n: int = Field(..., ge=1)
    strategy: StrategyKind = StrategyKind.FEEDBACK
    matrix: list[list[float]] | None = None
    policy: FeedbackPolicy | None = Field(default=None, exclude=True)
    chunk_size: int = Field(default=8192, ge=1)

    @field_validator("matrix")
    @classmethod
    def validate_matrix(cls, v: list[list[float]] | None) -> list[list[float]] | None:
        """Square matrices only."""
        if v is not None and any(len(row) != len(v) for row in v):
            raise ValueError("Fixed matrix must be square")
        return v


class McEstimate(BaseModel):
    """Sample mean of f(X_n) with its standard error."""

    mean: float
    stderr: float
    paths: int

    def within(self, target: float, allowance: float = 0.0, z: float = 3.0) -> bool:
        """|mean - target| <= z * stderr + allowance."""
        return abs(self.mean - target) <= z * self.stderr + allowance


class ConvergenceRow(BaseModel):
    """One n of a convergence study."""

    n: int
    dp_value: float
    gap: float  # |dp - pde|
    runtime: float  # seconds
    rate: float | None = None  # log(gap_prev / gap) / log(n / n_prev)


class ConvergenceReport(BaseModel):
    """DP values against the PDE reference across n."""

    spec_name: str
    pde_value: float
    rows: list[ConvergenceRow] = []
    rate: float | None = None
    fixed_matrix_limits: list[float] = []  # E f(A eta) per extreme A
    config: dict[str, Any] = {}

    @property
    def gaps(self) -> list[float]:
        """Gap column in n order."""
        return [row.gap for row in self.rows]


class InvarianceRow(BaseModel):
    """DP values for the original and rotated uncertainty sets at one n."""

    n: int
    value: float
    rotated_value: float
    gap: float


class InvarianceReport(BaseModel):
    """Covariance-only dependence study."""

    spec_name: str
    gaussian: bool
    tolerance: float
    rows: list[InvarianceRow] = []
    passed: bool = True
    config: dict[str, Any] = {}


class NoiseStudyReport(BaseModel):
    """DP values per noise law and n."""

    spec_name: str
    noise_labels: list[str]
    n_list: list[int]
    values: list[list[float]]  # values[i][k] for noise i, n_list[k]
    max_gap_first: float
    max_gap_last: float
    passed: bool = True
    config: dict[str, Any] = {}


class EulerRow(BaseModel):
    """Native-noise and Gaussian-increment estimates under one feedback policy."""

    n: int
    native: McEstimate
    gaussian: McEstimate
    difference: float
    combined_stderr: float


class EulerReport(BaseModel):
    """Euler scheme with arbitrary increments against Gaussian increments."""

    spec_name: str
    rows: list[EulerRow] = []
    config: dict[str, Any] = {}


class ResidualRow(BaseModel):
    """Consistency residuals of one evaluation point across n."""

    t: float
    x: list[float]
    residuals: list[float]
    decaying: bool


class ResidualTable(BaseModel):
    """Residual study for one test function."""

    test_function: str
    n_list: list[int]
    rows: list[ResidualRow] = []

    @property
    def max_residual(self) -> float:
        """Largest residual in the table."""
        return max((max(r.residuals) for r in self.rows), default=0.0)


class SolveReport(BaseModel):
    """Scalar outcome of one DP or PDE solve."""

    solver: str  # "dp" | "pde"
    spec_name: str
    value: float
    n: int | None = None  # DP steps
    dt: float | None = None  # PDE time step
    steps: int
    nodes: list[int]
    half_widths: list[float]
    runtime: float
    warnings: list[str] = []
    config: dict[str, Any] = {}


class GEvalReport(BaseModel):
    """G(S), the maximizer and every candidate value."""

    matrix: list[list[float]]
    value: float
    argmax_index: int
    argmax: list[list[float]]
    candidates: list[float]


class SimulationReport(BaseModel):
    """Monte Carlo estimate with the run configuration."""

    spec_name: str
    strategy: StrategyKind
    n: int
    estimate: McEstimate
    config: dict[str, Any] = {}
