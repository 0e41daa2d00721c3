"""Tests for the brute-force tree and strategy-table values."""

import math

import pytest

from src.uncertain_clt.core.grid import SpatialGrid
from src.uncertain_clt.core.models import Payoff, PayoffKind, ProblemSpec
from src.uncertain_clt.core.oracle import compare_with_dp, strategy_table_value, tree_value


@pytest.fixture
def cos_band_spec(convex_spec: ProblemSpec) -> ProblemSpec:
    """Band [1, 2] with f = cos: the maximizer changes sign with x."""
    return convex_spec.with_payoff(Payoff.builtin(PayoffKind.COSINE))


def test_tree_convex_value(convex_spec: ProblemSpec) -> None:
    """Test the tree gives sigma_hi^2 = 4 for x^2."""
    for n in (1, 2, 3, 5):
        assert tree_value(convex_spec, n) == pytest.approx(4.0, abs=1e-12)


def test_tree_classical_value(classical_spec: ProblemSpec) -> None:
    """Test the tree matches cos(1/sqrt(n))^n for the singleton set."""
    for n in (1, 4, 7):
        expected = math.cos(1.0 / math.sqrt(n)) ** n
        assert tree_value(classical_spec, n) == pytest.approx(expected, abs=1e-12)


def test_tables_agree_with_tree(cos_band_spec: ProblemSpec) -> None:
    """Test the best strategy table equals the tree value."""
    for n in (1, 2, 3):
        assert strategy_table_value(cos_band_spec, n) == pytest.approx(
            tree_value(cos_band_spec, n), abs=1e-12
        )


def test_tree_too_large(convex_spec: ProblemSpec) -> None:
    """Test oversized trees are refused."""
    with pytest.raises(ValueError, match="too large"):
        tree_value(convex_spec, 20)


def test_tables_too_many(convex_spec: ProblemSpec) -> None:
    """Test oversized table enumerations are refused."""
    with pytest.raises(ValueError, match="too many"):
        strategy_table_value(convex_spec, 5)


def test_dp_exact_on_lattice(cos_band_spec: ProblemSpec) -> None:
    """Test the lattice-aligned grid reproduces the tree value."""
    for n in (2, 3, 6):
        comparison = compare_with_dp(cos_band_spec, n, enumerate_tables=False)
        assert comparison.error <= 1e-10


def test_interpolation_constant(cos_band_spec: ProblemSpec) -> None:
    """Test the reported constant is error / h^2 on an off-lattice grid."""
    comparison = compare_with_dp(cos_band_spec, 3, grid=SpatialGrid.uniform(12.0, 121))
    assert comparison.spacing == pytest.approx(0.2)
    assert comparison.error > 0.0
    assert comparison.constant == pytest.approx(comparison.error / 0.04)
    assert comparison.table_value == pytest.approx(comparison.tree_value, abs=1e-12)


def test_tables_skipped_when_too_many(cos_band_spec: ProblemSpec) -> None:
    """Test large n leaves the table value empty instead of failing."""
    comparison = compare_with_dp(cos_band_spec, 5)
    assert comparison.table_value is None
    assert comparison.tree_value == pytest.approx(comparison.dp_value, abs=1e-10)
