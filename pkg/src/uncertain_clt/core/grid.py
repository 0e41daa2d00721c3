"""Spatial grids and the time-indexed value / policy containers defined on them."""

from dataclasses import dataclass, field

import numpy as np
import pandas as pd
from numpy.typing import NDArray
from pydantic import BaseModel, ConfigDict, Field, field_validator
from scipy import ndimage

FloatArray = NDArray[np.float64]
IntArray = NDArray[np.int64]
PolicyArray = NDArray[np.int16]

MAX_GRID_DIMENSION = 3


class SpatialGrid(BaseModel):
    """Tensor grid symmetric about the origin, with the origin exactly a node."""

    model_config = ConfigDict(frozen=True)

    half_widths: list[float] = Field(..., min_length=1, max_length=MAX_GRID_DIMENSION)
    nodes: list[int] = Field(..., min_length=1, max_length=MAX_GRID_DIMENSION)

    @field_validator("half_widths")
    @classmethod
    def validate_half_widths(cls, v: list[float]) -> list[float]:
        """Half-widths must be positive."""
        if any(r <= 0 for r in v):
            raise ValueError("Grid half-widths must be positive")
        return v

    @field_validator("nodes")
    @classmethod
    def validate_nodes(cls, v: list[int]) -> list[int]:
        """Odd node counts keep 0 on the grid."""
        for count in v:
            if count < 3 or count % 2 == 0:
                raise ValueError(f"Node counts must be odd and >= 3, got {count}")
        return v

    def model_post_init(self, __context: object) -> None:
        """Check per-axis lists agree."""
        if len(self.half_widths) != len(self.nodes):
            raise ValueError("half_widths and nodes must have one entry per axis")

    @classmethod
    def uniform(cls, half_width: float, nodes: int, dimension: int = 1) -> "SpatialGrid":
        """Same half-width and node count on every axis."""
        return cls(half_widths=[half_width] * dimension, nodes=[nodes] * dimension)

    @classmethod
    def from_spacing(cls, half_width: float, spacing: float, dimension: int = 1) -> "SpatialGrid":
        """Grid with the given spacing, half-width rounded up to a whole number of cells."""
        cells = int(np.ceil(half_width / spacing - 1e-9))
        return cls.uniform(cells * spacing, 2 * cells + 1, dimension)

    @property
    def dimension(self) -> int:
        """Number of axes."""
        return len(self.nodes)

    @property
    def shape(self) -> tuple[int, ...]:
        """Array shape of one time slice."""
        return tuple(self.nodes)

    @property
    def spacing(self) -> list[float]:
        """Per-axis node spacing h_r = 2 R_r / (N_r - 1)."""
        return [2.0 * r / (n - 1) for r, n in zip(self.half_widths, self.nodes, strict=True)]

    @property
    def min_spacing(self) -> float:
        """Smallest spacing over the axes."""
        return min(self.spacing)

    @property
    def origin_index(self) -> tuple[int, ...]:
        """Index of the node at x = 0."""
        return tuple((n - 1) // 2 for n in self.nodes)

    def axes(self) -> list[FloatArray]:
        """Node coordinates per axis, built from integer offsets so the origin is exact."""
        return [
            (np.arange(n) - (n - 1) // 2) * h
            for n, h in zip(self.nodes, self.spacing, strict=True)
        ]

    def points(self) -> FloatArray:
        """Node coordinates, shape (*shape, d)."""
        mesh = np.meshgrid(*self.axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def nearest_index(self, x: FloatArray) -> tuple[IntArray, ...]:
        """Index of the node nearest to each point of shape (..., d), clamped to the grid."""
        pts = np.asarray(x, dtype=float)
        index: list[IntArray] = []
        for r, (n, h) in enumerate(zip(self.nodes, self.spacing, strict=True)):
            offset = np.rint(pts[..., r] / h).astype(np.int64) + (n - 1) // 2
            index.append(np.clip(offset, 0, n - 1))
        return tuple(index)

    def contains(self, x: FloatArray) -> bool:
        """Whether a point lies inside the grid box."""
        pts = np.asarray(x, dtype=float)
        return bool(all(abs(pts[r]) <= self.half_widths[r] for r in range(self.dimension)))


def shifted_values(values: FloatArray, displacement: FloatArray, spacing: list[float]) -> FloatArray:
    """Multilinear interpolation of a grid slice at every node shifted by ``displacement``.

    Returns w with w[i] = I(values)(x_i + displacement), points outside the
    grid clamped to the boundary value.
    """
    shift = [-float(delta) / h for delta, h in zip(displacement, spacing, strict=True)]
    return np.asarray(
        ndimage.shift(values, shift, order=1, mode="nearest", prefilter=False), dtype=float
    )


@dataclass(frozen=True)
class ValueGrid:
    """Stack of value slices v(t_k, .) on a spatial grid.

    Solvers keep every slice by default; with ``keep_slices=False`` only the
    slices at t = 0 and t = 1 are stored.
    """

    values: FloatArray  # shape (len(times), *grid.shape)
    times: FloatArray
    grid: SpatialGrid
    bound: float

    @property
    def steps(self) -> int:
        """Number of stored time intervals."""
        return int(self.values.shape[0] - 1)

    @property
    def value_at_origin(self) -> float:
        """v(0, 0) read at the origin node."""
        return float(self.values[(0, *self.grid.origin_index)])

    @property
    def max_abs(self) -> float:
        """max |v| over every slice and node."""
        return float(np.max(np.abs(self.values)))

    def slice_frame(self, j: int) -> pd.DataFrame:
        """One time slice as node coordinates + value."""
        pts = self.grid.points().reshape(-1, self.grid.dimension)
        frame = pd.DataFrame(pts, columns=[f"x{r + 1}" for r in range(self.grid.dimension)])
        frame.insert(0, "t", self.times[j])
        frame.insert(0, "j", j)
        frame["value"] = self.values[j].ravel()
        return frame

    def to_frame(self, slices: list[int] | None = None) -> pd.DataFrame:
        """Long-format table (j, t, x1..xd, value) of the selected slices."""
        chosen = range(self.steps + 1) if slices is None else slices
        return pd.concat([self.slice_frame(j) for j in chosen], ignore_index=True)


@dataclass(frozen=True)
class FeedbackPolicy:
    """Index of the maximizing extreme matrix per time step and node."""

    indices: PolicyArray  # shape (steps, *grid.shape)
    times: FloatArray  # left end of each step
    grid: SpatialGrid
    extremes: list[FloatArray] = field(default_factory=list)

    def __post_init__(self) -> None:
        """Validate index range."""
        if self.indices.size and (
            self.indices.min() < 0 or self.indices.max() >= len(self.extremes)
        ):
            raise ValueError("Policy index out of range of the extreme matrices")

    @property
    def steps(self) -> int:
        """Number of decision steps."""
        return int(self.indices.shape[0])

    def indices_at(self, j: int, x: FloatArray) -> PolicyArray:
        """Nearest-node policy index for points of shape (..., d) at step j."""
        return self.indices[(j, *self.grid.nearest_index(x))]

    def to_frame(self) -> pd.DataFrame:
        """Long-format table (j, t, x1..xd, index)."""
        pts = self.grid.points().reshape(-1, self.grid.dimension)
        frames = []
        for j in range(self.steps):
            frame = pd.DataFrame(pts, columns=[f"x{r + 1}" for r in range(self.grid.dimension)])
            frame.insert(0, "t", self.times[j])
            frame.insert(0, "j", j)
            frame["index"] = self.indices[j].ravel()
            frames.append(frame)
        return pd.concat(frames, ignore_index=True)
