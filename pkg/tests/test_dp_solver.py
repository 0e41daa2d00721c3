"""Tests for backward value iteration and policy extraction."""

import math

import numpy as np
import pytest

from src.uncertain_clt.core.dp_solver import (
    default_grid,
    dp_solve,
    dp_step,
    extract_policy_matrix,
)
from src.uncertain_clt.core.errors import (
    PayoffBoundError,
    UnsupportedNoiseError,
    UnsupportedUncertaintyError,
)
from src.uncertain_clt.core.grid import SpatialGrid
from src.uncertain_clt.core.models import (
    NoiseModel,
    Payoff,
    PayoffKind,
    ProblemSpec,
    SamplerLaw,
    UncertaintySet,
)

UNIT = UncertaintySet.finite_set([[[1.0]]])


def quadratic_slice(grid: SpatialGrid) -> np.ndarray:
    """x^2 on a 1-d grid."""
    return grid.points()[..., 0] ** 2


class TestDpStep:
    """One backward step on a unit-spacing grid."""

    def test_single_matrix_average(self, rademacher: NoiseModel) -> None:
        """Lambda = {1}, f = x^2, n = 1: (f(1) + f(-1)) / 2 = 1 at the origin."""
        grid = SpatialGrid.uniform(4.0, 9)
        values, policy = dp_step(quadratic_slice(grid), UNIT, rademacher, 1, grid)
        assert values[grid.origin_index] == pytest.approx(1.0)
        assert policy[grid.origin_index] == 0

    def test_band_picks_upper_volatility(self, band: UncertaintySet, rademacher: NoiseModel) -> None:
        """Lambda = {1, 2}: max(1, 4) = 4 with the index of sigma = 2."""
        grid = SpatialGrid.uniform(4.0, 9)
        values, policy = dp_step(quadratic_slice(grid), band, rademacher, 1, grid)
        assert values[grid.origin_index] == pytest.approx(4.0)
        assert policy[grid.origin_index] == 1

    def test_constant_preserved(self, band: UncertaintySet) -> None:
        """A constant slice stays constant for any set and noise."""
        grid = SpatialGrid.uniform(6.0, 61)
        for noise in (NoiseModel.rademacher(), NoiseModel.gauss_hermite(7), NoiseModel.two_point(2.0)):
            values, _ = dp_step(np.full(grid.shape, 3.5), band, noise, 9, grid)
            assert np.allclose(values, 3.5, atol=1e-13)

    def test_monotone_in_input(self, band: UncertaintySet) -> None:
        """Raising the input slice never lowers the output."""
        rng = np.random.default_rng(0)
        grid = SpatialGrid.uniform(6.0, 81)
        noise = NoiseModel.gauss_hermite(5)
        for _ in range(10):
            low = rng.normal(size=grid.shape)
            high = low + rng.uniform(0.0, 1.0, size=grid.shape)
            v_low, _ = dp_step(low, band, noise, 7, grid)
            v_high, _ = dp_step(high, band, noise, 7, grid)
            assert np.all(v_high >= v_low - 1e-14)

    def test_sampler_noise_rejected(self, band: UncertaintySet) -> None:
        """Sampler-only noise has no nodes to integrate with."""
        grid = SpatialGrid.uniform(4.0, 9)
        with pytest.raises(UnsupportedNoiseError):
            dp_step(np.zeros(grid.shape), band, NoiseModel.sampler(SamplerLaw.GAUSSIAN), 1, grid)


class TestDpSolve:
    """Full backward solves."""

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 8])
    def test_convex_value(self, convex_spec: ProblemSpec, n: int) -> None:
        """f = x^2 under the band [1, 2] gives sigma_hi^2 = 4 for every n."""
        assert dp_solve(convex_spec, n).value_at_origin == pytest.approx(4.0, abs=1e-9)

    @pytest.mark.parametrize("n", [1, 4, 16])
    def test_concave_value(self, concave_spec: ProblemSpec, n: int) -> None:
        """f = -x^2 gives -sigma_lo^2 = -1."""
        assert dp_solve(concave_spec, n).value_at_origin == pytest.approx(-1.0, abs=1e-9)

    @pytest.mark.parametrize("n", [1, 2, 3, 5, 8, 12])
    def test_classical_enumeration(self, classical_spec: ProblemSpec, n: int) -> None:
        """Singleton {1}: E cos(sum xi_j / sqrt(n)) = cos(1 / sqrt(n))^n."""
        expected = math.cos(1.0 / math.sqrt(n)) ** n
        assert dp_solve(classical_spec, n).value_at_origin == pytest.approx(expected, abs=1e-9)

    def test_two_dimensional_classical(self) -> None:
        """Lambda = {I} in 2-d with f = cos(x1 + x2): cos(1/2)^8 at n = 4."""
        spec = ProblemSpec(
            uncertainty=UncertaintySet.finite_set([np.eye(2)]),
            noise=NoiseModel.rademacher(2),
            payoff=Payoff.builtin(PayoffKind.COSINE, 2),
        )
        assert dp_solve(spec, 4).value_at_origin == pytest.approx(math.cos(0.5) ** 8, abs=1e-9)

    def test_terminal_slice_is_payoff(self, classical_spec: ProblemSpec) -> None:
        """values[n] equals f at the nodes."""
        result = dp_solve(classical_spec, 4)
        grid = result.values.grid
        assert np.array_equal(result.values.values[-1], np.cos(grid.points()[..., 0]))

    def test_uniform_bound(self, convex_spec: ProblemSpec, classical_spec: ProblemSpec) -> None:
        """max |v| over every slice stays below M."""
        for spec in (convex_spec, classical_spec, convex_spec.with_noise(NoiseModel.gauss_hermite(7))):
            result = dp_solve(spec, 8)
            assert result.values.max_abs <= result.values.bound

    def test_bound_below_slice_values(self, convex_spec: ProblemSpec) -> None:
        """An explicit M that holds on the default box but not on a wider grid is rejected."""
        spec = convex_spec.with_payoff(Payoff.builtin(PayoffKind.QUADRATIC, 1, bound=200.0))
        with pytest.raises(PayoffBoundError):
            dp_solve(spec, 4, grid=SpatialGrid.uniform(30.0, 241))

    def test_monotone_in_uncertainty(self, classical_spec: ProblemSpec) -> None:
        """Enlarging the set never lowers the value, at every node and step."""
        grid = SpatialGrid.from_spacing(6.0, 0.5)
        small = dp_solve(classical_spec, 4, grid=grid)
        large_spec = classical_spec.with_uncertainty(UncertaintySet.finite_set([[[1.0]], [[2.0]]]))
        large = dp_solve(large_spec, 4, grid=grid)
        assert np.all(large.values.values >= small.values.values - 1e-14)

    def test_constant_payoff(self, band: UncertaintySet, rademacher: NoiseModel) -> None:
        """f = c gives v = c and a policy of all first indices."""
        spec = ProblemSpec(
            uncertainty=band, noise=rademacher, payoff=Payoff.tabulated([[-1.0, 1.0]], [2.0, 2.0])
        )
        result = dp_solve(spec, 5)
        assert np.allclose(result.values.values, 2.0, atol=1e-14)
        assert np.all(result.policy.indices == 0)

    def test_keep_slices_false(self, convex_spec: ProblemSpec) -> None:
        """Only t = 0 and t = 1 are stored; the policy stays complete."""
        result = dp_solve(convex_spec, 6, keep_slices=False)
        assert result.values.values.shape[0] == 2
        assert result.values.times.tolist() == [0.0, 1.0]
        assert result.policy.steps == 6
        assert result.value_at_origin == pytest.approx(4.0, abs=1e-9)

    def test_small_domain_warning(self, convex_spec: ProblemSpec) -> None:
        """R below 3 sigma_max is reported."""
        result = dp_solve(convex_spec, 4, grid=SpatialGrid.uniform(2.0, 9))
        assert any("half-width" in w for w in result.warnings)

    def test_coarse_grid_warning(self, convex_spec: ProblemSpec) -> None:
        """Spacing above sigma_max / sqrt(n) is reported."""
        result = dp_solve(convex_spec, 4, grid=SpatialGrid.uniform(12.0, 17))
        assert any("spacing" in w for w in result.warnings)

    def test_invalid_n(self, convex_spec: ProblemSpec) -> None:
        """n must be at least 1."""
        with pytest.raises(ValueError):
            dp_solve(convex_spec, 0)

    def test_four_dimensions_unsupported(self) -> None:
        """Grid DP stops at d = 3."""
        spec = ProblemSpec(
            uncertainty=UncertaintySet.finite_set([np.eye(4)]),
            noise=NoiseModel.rademacher(4),
            payoff=Payoff.builtin(PayoffKind.COSINE, 4),
        )
        with pytest.raises(UnsupportedUncertaintyError):
            dp_solve(spec, 2)


class TestDefaultGrid:
    """Lattice-aligned spacing."""

    def test_aligned_spacing(self, convex_spec: ProblemSpec) -> None:
        """Displacements +-1, +-2 give spacing 1 / sqrt(n)."""
        grid, warnings = default_grid(convex_spec, 16)
        assert grid.spacing == pytest.approx([0.25])
        assert grid.half_widths[0] >= 12.0
        assert warnings == []

    def test_refined_when_not_aligned(self, convex_spec: ProblemSpec) -> None:
        """{1, sqrt 2} is refined by ceil(n^(1/4))."""
        spec = convex_spec.with_uncertainty(UncertaintySet.finite_set([[[1.0]], [[math.sqrt(2.0)]]]))
        grid, _ = default_grid(spec, 16)
        assert grid.spacing == pytest.approx([0.125])

    def test_node_cap(self, convex_spec: ProblemSpec) -> None:
        """Hitting the node cap coarsens the grid and warns."""
        grid, warnings = default_grid(convex_spec, 64, max_nodes=101)
        assert grid.nodes == [101]
        assert any("node cap" in w for w in warnings)

    def test_origin_is_a_node(self, convex_spec: ProblemSpec) -> None:
        """The middle node sits exactly at 0."""
        grid, _ = default_grid(convex_spec, 7)
        assert grid.axes()[0][grid.origin_index[0]] == 0.0


class TestPolicy:
    """Extracted feedback policies."""

    def test_convex_picks_sigma_hi(self, convex_spec: ProblemSpec) -> None:
        """x^2: sigma = 2 at every node away from the boundary."""
        result = dp_solve(convex_spec, 4)
        for j in range(4):
            for x in np.linspace(-6.0, 6.0, 25):
                matrix = extract_policy_matrix(result.policy, convex_spec.uncertainty, j, np.array([x]))
                assert float(matrix[0, 0]) == 2.0

    def test_concave_picks_sigma_lo(self, concave_spec: ProblemSpec) -> None:
        """-x^2: sigma = 1 at every node away from the boundary."""
        result = dp_solve(concave_spec, 4)
        for j in range(4):
            for x in np.linspace(-6.0, 6.0, 25):
                matrix = extract_policy_matrix(result.policy, concave_spec.uncertainty, j, np.array([x]))
                assert float(matrix[0, 0]) == 1.0

    def test_singleton_policy(self, classical_spec: ProblemSpec) -> None:
        """One matrix: the policy is always that matrix."""
        result = dp_solve(classical_spec, 3)
        assert np.all(result.policy.indices == 0)
        matrix = extract_policy_matrix(result.policy, classical_spec.uncertainty, 2, np.array([0.7]))
        assert np.array_equal(matrix, np.array([[1.0]]))

    def test_lookup_clamps_outside_grid(self, convex_spec: ProblemSpec) -> None:
        """Points beyond the grid use the boundary node."""
        result = dp_solve(convex_spec, 2)
        outside = extract_policy_matrix(result.policy, convex_spec.uncertainty, 0, np.array([1e6]))
        edge = result.policy.indices[0, -1]
        assert np.array_equal(outside, convex_spec.uncertainty.extremes()[edge])

    def test_step_out_of_range(self, convex_spec: ProblemSpec) -> None:
        """j must be below n."""
        result = dp_solve(convex_spec, 2)
        with pytest.raises(ValueError):
            extract_policy_matrix(result.policy, convex_spec.uncertainty, 2, np.array([0.0]))
