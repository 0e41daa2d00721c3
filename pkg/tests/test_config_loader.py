"""Tests for YAML problem files."""

from pathlib import Path

import pytest

from src.uncertain_clt.core.errors import ConfigError
from src.uncertain_clt.core.models import NoiseKind, UncertaintyKind
from src.uncertain_clt.core.problem import validate
from src.uncertain_clt.infra.config_loader import load_problem, parse_problem


def test_load_problem_file(problem_yaml: Path) -> None:
    """Test every section of the sample file is read."""
    problem = load_problem(problem_yaml)
    spec = problem.spec
    assert spec.name == "convex"
    assert spec.uncertainty.kind == UncertaintyKind.SCALAR_INTERVAL
    assert spec.noise.kind == NoiseKind.ATOMS
    assert spec.noise.points == [[1.0], [-1.0]]
    assert problem.grid.half_width == 12.0
    assert problem.grid.nodes is None
    assert problem.pde.spacing == 0.1
    assert problem.pde.theta == 0.9
    assert problem.simulation.paths == 4000
    assert problem.simulation.seed == 7
    assert problem.simulation.chunk_size == 8192
    assert problem.source == str(problem_yaml)


def test_shipped_configs_load(config_dir: Path) -> None:
    """Test every problem file in configs/ parses and validates."""
    files = sorted(config_dir.glob("*.yaml"))
    assert files
    for path in files:
        problem = load_problem(path)
        assert validate(problem.spec).passed, path.name


def test_name_defaults_to_file_stem(tmp_path: Path) -> None:
    """Test a file without ``name`` is named after the file."""
    path = tmp_path / "untitled.yaml"
    path.write_text(
        "uncertainty: {kind: finite_set, matrices: [[[1.0]]]}\n"
        "noise: {kind: rademacher}\n"
        "payoff: {kind: cosine}\n"
    )
    problem = load_problem(path)
    assert problem.spec.name == "untitled"
    assert problem.spec.dimension == 1


def test_dimension_inferred_for_shorthand_noise() -> None:
    """Test a 2-d set expands Rademacher noise to four atoms."""
    problem = parse_problem(
        "uncertainty:\n"
        "  kind: diagonal_box\n"
        "  box: [[0.5, 1.0], [1.0, 2.0]]\n"
        "noise:\n"
        "  kind: rademacher\n"
        "payoff:\n"
        "  kind: gaussian_bump\n"
    )
    assert problem.spec.dimension == 2
    assert problem.spec.noise.dimension == 2
    assert len(problem.spec.noise.points or []) == 4


def test_two_point_shorthand() -> None:
    """Test the asymmetric law takes its parameter from the file."""
    problem = parse_problem(
        "uncertainty: {kind: finite_set, matrices: [[[1.0]]]}\n"
        "noise: {kind: two_point, a: 3.0}\n"
        "payoff: {kind: cosine}\n"
    )
    points = [p[0] for p in problem.spec.noise.points or []]
    assert points == pytest.approx([3.0, -1.0 / 3.0])


def test_gauss_hermite_default_order() -> None:
    """Test the quadrature order defaults to 7."""
    problem = parse_problem(
        "uncertainty: {kind: finite_set, matrices: [[[1.0]]]}\n"
        "noise: {kind: gauss_hermite}\n"
        "payoff: {kind: cosine}\n"
    )
    assert problem.spec.noise.order == 7


class TestErrors:
    """ConfigError with line numbers."""

    def test_invalid_value_reports_line(self, problem_yaml: Path) -> None:
        """An out-of-range quadrature order points at its own line."""
        text = problem_yaml.read_text().replace(
            "  kind: rademacher\n", "  kind: gauss_hermite\n  order: 0\n"
        )
        with pytest.raises(ConfigError) as excinfo:
            parse_problem(text)
        assert excinfo.value.line == 9
        assert "noise.order" in str(excinfo.value)

    def test_unknown_key_reports_line(self, problem_yaml: Path) -> None:
        """Solver sections reject unknown keys."""
        text = problem_yaml.read_text().replace(
            "  half_width: 12.0\n", "  half_width: 12.0\n  bogus: 1\n"
        )
        with pytest.raises(ConfigError) as excinfo:
            parse_problem(text)
        assert excinfo.value.line == 13

    def test_inverted_interval(self, problem_yaml: Path) -> None:
        """sigma_lo above sigma_hi is reported inside the uncertainty section."""
        text = problem_yaml.read_text().replace("sigma_lo: 1.0", "sigma_lo: 3.0")
        with pytest.raises(ConfigError) as excinfo:
            parse_problem(text)
        assert excinfo.value.line is not None
        assert 2 <= excinfo.value.line <= 6

    def test_yaml_syntax_error(self) -> None:
        """Broken YAML carries the parser's line."""
        with pytest.raises(ConfigError) as excinfo:
            parse_problem("uncertainty:\n  kind: [finite_set\nnoise: {}\n")
        assert excinfo.value.line is not None
        assert str(excinfo.value).startswith(f"line {excinfo.value.line}: ")

    def test_missing_section(self) -> None:
        """payoff is required."""
        with pytest.raises(ConfigError, match="payoff"):
            parse_problem(
                "uncertainty: {kind: finite_set, matrices: [[[1.0]]]}\nnoise: {kind: rademacher}\n"
            )

    def test_not_a_mapping(self) -> None:
        """A top-level list is refused on line 1."""
        with pytest.raises(ConfigError) as excinfo:
            parse_problem("- 1\n- 2\n")
        assert excinfo.value.line == 1

    def test_missing_file(self, tmp_path: Path) -> None:
        """Nonexistent paths raise ConfigError, not OSError."""
        with pytest.raises(ConfigError, match="not found"):
            load_problem(tmp_path / "absent.yaml")


def test_band_dimension_defaults_to_one() -> None:
    """Test a scalar band without ``dimension`` is one-dimensional."""
    problem = parse_problem(
        "uncertainty: {kind: scalar_interval, sigma_lo: 1.0, sigma_hi: 2.0}\n"
        "noise: {kind: rademacher}\n"
        "payoff: {kind: quadratic}\n"
    )
    assert problem.spec.dimension == 1
    assert problem.spec.uncertainty.sigma_max == 2.0


def test_band_dimension_from_payoff() -> None:
    """Test a scalar band takes its dimension from the payoff when the set omits it."""
    problem = parse_problem(
        "uncertainty: {kind: scalar_interval, sigma_lo: 1.0, sigma_hi: 2.0}\n"
        "noise: {kind: rademacher}\n"
        "payoff: {kind: cosine, dimension: 2}\n"
    )
    assert problem.spec.dimension == 2
    assert problem.spec.noise.dimension == 2


def test_seed_unset_by_default() -> None:
    """Test a file without a simulation section leaves the seed to the caller."""
    problem = parse_problem(
        "uncertainty: {kind: finite_set, matrices: [[[1.0]]]}\n"
        "noise: {kind: rademacher}\n"
        "payoff: {kind: cosine}\n"
    )
    assert problem.simulation.seed is None
