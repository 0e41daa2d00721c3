"""Grid-free brute-force values for small instances.

Two independent ways of computing v_n(0, 0) without a spatial grid:

- ``tree_value``: recursion over the full noise tree with a max at every
  tree node, i.e. the value over all strategies adapted to the noise history;
- ``strategy_table_value``: explicit enumeration of every strategy table
  (one matrix per tree node), each evaluated exactly over all noise paths.

Both agree with each other by construction; they serve as the reference the
grid-based DP is compared against.
"""

import itertools
import logging
import math

import numpy as np
from numpy.typing import NDArray
from pydantic import BaseModel

from src.uncertain_clt.core.dp_solver import dp_solve, unit_displacements
from src.uncertain_clt.core.grid import SpatialGrid
from src.uncertain_clt.core.models import ProblemSpec

logger = logging.getLogger(__name__)

FloatArray = NDArray[np.float64]

MAX_TREE_LEAVES = 2**22
MAX_STRATEGY_TABLES = 2**16


class OracleComparison(BaseModel):
    """Grid DP against the brute-force tree at the origin."""

    spec_name: str
    n: int
    dp_value: float
    tree_value: float
    table_value: float | None = None
    spacing: float
    error: float  # |dp - tree|
    constant: float  # error / h^2


def tree_value(spec: ProblemSpec, n: int) -> float:
    """v_n(0, 0) by exhaustive recursion over all noise paths.

    Raises:
        ValueError: If the tree has more than ``MAX_TREE_LEAVES`` leaves
    """
    displacements, weights = unit_displacements(spec.uncertainty, spec.noise)
    branching = len(displacements) * len(weights)
    if branching**n > MAX_TREE_LEAVES:
        raise ValueError(f"Tree with {branching}^{n} leaves is too large to enumerate")
    scale = 1.0 / math.sqrt(n)
    steps = [offsets * scale for offsets in displacements]

    def value(level: int, states: FloatArray) -> FloatArray:
        # states has shape (m, d); returns the value at each state
        if level == n:
            return spec.payoff.evaluate(states)
        best = np.full(len(states), -np.inf)
        for offsets in steps:
            children = states[:, None, :] + offsets[None, :, :]
            child_values = value(level + 1, children.reshape(-1, states.shape[1]))
            expectation = child_values.reshape(len(states), len(weights)) @ weights
            best = np.maximum(best, expectation)
        return best

    return float(value(0, np.zeros((1, spec.dimension)))[0])


def strategy_table_value(spec: ProblemSpec, n: int) -> float:
    """v_n(0, 0) as the best of all strategy tables.

    A strategy table assigns an extreme matrix to every node of the noise
    tree above the leaves; its value E f(X_n) is computed exactly over the
    K^n noise paths.

    Raises:
        ValueError: If there are more than ``MAX_STRATEGY_TABLES`` tables
    """
    displacements, weights = unit_displacements(spec.uncertainty, spec.noise)
    m, k = len(displacements), len(weights)
    decision_nodes = sum(k**j for j in range(n))
    if m**decision_nodes > MAX_STRATEGY_TABLES:
        raise ValueError(
            f"{m}^{decision_nodes} strategy tables are too many to enumerate"
        )
    scale = 1.0 / math.sqrt(n)
    steps = np.stack(displacements) * scale  # (m, K, d)

    paths = np.array(list(itertools.product(range(k), repeat=n)), dtype=np.int64)  # (P, n)
    path_weights = np.prod(weights[paths], axis=1)
    # decision node of path p at step j: offset of level j + index of the history prefix
    node_of = np.zeros(paths.shape, dtype=np.int64)
    for j in range(n):
        prefix = np.zeros(len(paths), dtype=np.int64)
        for i in range(j):
            prefix = prefix * k + paths[:, i]
        node_of[:, j] = sum(k**i for i in range(j)) + prefix

    tables = np.array(list(itertools.product(range(m), repeat=decision_nodes)), dtype=np.int64)
    terminal = np.zeros((len(tables), len(paths), spec.dimension))
    for j in range(n):
        choice = tables[:, node_of[:, j]]  # (S, P)
        terminal += steps[choice, paths[None, :, j]]
    values = spec.payoff.evaluate(terminal) @ path_weights
    return float(values.max())


def compare_with_dp(
    spec: ProblemSpec,
    n: int,
    grid: SpatialGrid | None = None,
    enumerate_tables: bool = True,
) -> OracleComparison:
    """Solve on a grid and against the tree, reporting C = |dp - tree| / h^2.

    Args:
        spec: Problem with atom noise
        n: Number of steps
        grid: DP grid; defaults to the solver's lattice-aligned grid
        enumerate_tables: Also enumerate strategy tables when small enough

    Returns:
        Comparison with the measured interpolation constant
    """
    dp = dp_solve(spec, n, grid=grid, keep_slices=False)
    tree = tree_value(spec, n)
    table: float | None = None
    if enumerate_tables:
        try:
            table = strategy_table_value(spec, n)
        except ValueError:
            logger.info("Skipping strategy-table enumeration for n=%d", n)
    spacing = dp.values.grid.min_spacing
    error = abs(dp.value_at_origin - tree)
    return OracleComparison(
        spec_name=spec.name,
        n=n,
        dp_value=dp.value_at_origin,
        tree_value=tree,
        table_value=table,
        spacing=spacing,
        error=error,
        constant=error / spacing**2,
    )
