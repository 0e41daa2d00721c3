"""Pytest configuration and shared fixtures."""

from pathlib import Path

import pytest

from src.uncertain_clt.core.experiments import (
    classical_benchmark,
    concave_benchmark,
    convex_benchmark,
)
from src.uncertain_clt.core.models import NoiseModel, ProblemSpec, UncertaintySet

CONFIG_DIR = Path(__file__).resolve().parent.parent / "configs"


@pytest.fixture
def band() -> UncertaintySet:
    """Scalar band sigma in [1, 2], d = 1."""
    return UncertaintySet.scalar_interval(1.0, 2.0)


@pytest.fixture
def rademacher() -> NoiseModel:
    """+-1 with probability 1/2, d = 1."""
    return NoiseModel.rademacher()


@pytest.fixture
def convex_spec() -> ProblemSpec:
    """Convex benchmark: band [1, 2], f = x^2, limit 4."""
    return convex_benchmark()


@pytest.fixture
def concave_spec() -> ProblemSpec:
    """Concave benchmark: band [1, 2], f = -x^2, limit -1."""
    return concave_benchmark()


@pytest.fixture
def classical_spec() -> ProblemSpec:
    """Singleton {1}, f = cos, limit exp(-1/2)."""
    return classical_benchmark()


@pytest.fixture
def config_dir() -> Path:
    """Directory of the sample problem files."""
    return CONFIG_DIR


@pytest.fixture
def problem_yaml(tmp_path: Path) -> Path:
    """Small convex problem file in a temporary directory."""
    path = tmp_path / "convex.yaml"
    path.write_text(
        "name: convex\n"
        "uncertainty:\n"
        "  kind: scalar_interval\n"
        "  dimension: 1\n"
        "  sigma_lo: 1.0\n"
        "  sigma_hi: 2.0\n"
        "noise:\n"
        "  kind: rademacher\n"
        "payoff:\n"
        "  kind: quadratic\n"
        "grid:\n"
        "  half_width: 12.0\n"
        "pde:\n"
        "  spacing: 0.1\n"
        "simulation:\n"
        "  paths: 4000\n"
        "  seed: 7\n"
    )
    return path
