"""YAML problem files.

A file holds a problem (``uncertainty``, ``noise``, ``payoff``) and optional
``grid``, ``pde`` and ``simulation`` sections with solver defaults. Errors
are reported as ``ConfigError`` with the line of the offending entry.
"""

import logging
from pathlib import Path
from typing import Any

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from src.uncertain_clt.core.errors import ConfigError
from src.uncertain_clt.core.models import (
    NoiseKind,
    NoiseModel,
    Payoff,
    ProblemSpec,
    UncertaintyKind,
    UncertaintySet,
)

logger = logging.getLogger(__name__)

NOISE_SHORTHANDS = ("rademacher", "two_point")


class GridSection(BaseModel):
    """DP grid defaults; ``nodes`` unset means the lattice-aligned default."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    half_width: float | None = Field(default=None, gt=0)
    nodes: int | None = Field(default=None, ge=3)


class PdeSection(BaseModel):
    """PDE reference discretization."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    spacing: float | None = Field(default=None, gt=0)
    dt: float | None = Field(default=None, gt=0)
    theta: float = Field(default=0.9, gt=0, le=1)


class SimulationSection(BaseModel):
    """Monte Carlo defaults; an unset ``seed`` means a fresh one per run, echoed in the report."""

    model_config = ConfigDict(frozen=True, extra="forbid")

    paths: int = Field(default=100_000, ge=1)
    seed: int | None = Field(default=None, ge=0)
    chunk_size: int = Field(default=8192, ge=1)


class ProblemFile(BaseModel):
    """Parsed problem file with every default materialized."""

    model_config = ConfigDict(frozen=True)

    spec: ProblemSpec
    grid: GridSection = GridSection()
    pde: PdeSection = PdeSection()
    simulation: SimulationSection = SimulationSection()
    source: str | None = None


def _line_of(node: yaml.Node | None, path: tuple[Any, ...]) -> int | None:
    """1-based line of the entry at ``path`` in a composed YAML tree (deepest match)."""
    if node is None:
        return None
    line = node.start_mark.line + 1
    for key in path:
        if isinstance(node, yaml.MappingNode):
            child = next((v for k, v in node.value if k.value == str(key)), None)
            if child is None:
                return line
            node = child
        elif isinstance(node, yaml.SequenceNode) and isinstance(key, int) and key < len(node.value):
            node = node.value[key]
        else:
            return line
        line = node.start_mark.line + 1
    return line


def _expand_noise(raw: dict[str, Any], default_dimension: int) -> dict[str, Any]:
    """Replace shorthand noise kinds by explicit atoms, in the problem dimension unless given."""
    kind = raw.get("kind")
    if kind not in NOISE_SHORTHANDS:
        return raw
    dimension = int(raw.get("dimension", default_dimension))
    if kind == "rademacher":
        noise = NoiseModel.rademacher(dimension)
    else:
        noise = NoiseModel.two_point(float(raw.get("a", 2.0)), dimension)
    expanded = noise.model_dump(exclude_none=True)
    if "moment_tolerance" in raw:
        expanded["moment_tolerance"] = raw["moment_tolerance"]
    return expanded


def _build_uncertainty(raw: dict[str, Any], fallback_dimension: int) -> UncertaintySet:
    """Uncertainty set, inferring a missing dimension from the matrices, the box or ``fallback_dimension``."""
    if raw.get("kind") == UncertaintyKind.FINITE_SET.value and "dimension" not in raw:
        matrices = raw.get("matrices") or [[[]]]
        raw = {**raw, "dimension": len(matrices[0])}
    if raw.get("kind") == UncertaintyKind.DIAGONAL_BOX.value and "dimension" not in raw:
        raw = {**raw, "dimension": len(raw.get("box") or [])}
    if "dimension" not in raw:
        raw = {**raw, "dimension": fallback_dimension}
    return UncertaintySet.model_validate(raw)


def parse_problem(text: str, source: str | None = None) -> ProblemFile:
    """Parse a YAML document into a ProblemFile.

    Raises:
        ConfigError: On YAML syntax errors, missing sections or invalid values
    """
    try:
        tree = yaml.compose(text, Loader=yaml.SafeLoader)
        data = yaml.safe_load(text)
    except yaml.MarkedYAMLError as e:
        line = e.problem_mark.line + 1 if e.problem_mark is not None else None
        raise ConfigError(f"invalid YAML: {e.problem}", line) from e
    if not isinstance(data, dict):
        raise ConfigError("problem file must be a mapping", 1)

    for section in ("uncertainty", "noise", "payoff"):
        if not isinstance(data.get(section), dict):
            raise ConfigError(f"missing or invalid section '{section}'", _line_of(tree, ()))

    current: tuple[Any, ...] = ()
    try:
        current = ("uncertainty",)
        fallback = data["noise"].get("dimension") or data["payoff"].get("dimension") or 1
        uncertainty = _build_uncertainty(data["uncertainty"], int(fallback))
        current = ("noise",)
        noise_raw = _expand_noise(data["noise"], uncertainty.dimension)
        if noise_raw.get("kind") == NoiseKind.GAUSS_HERMITE.value:
            noise_raw = {"order": 7, **noise_raw}
        noise = NoiseModel.model_validate({"dimension": uncertainty.dimension, **noise_raw})
        current = ("payoff",)
        payoff = Payoff.model_validate({"dimension": uncertainty.dimension, **data["payoff"]})
        current = ()
        spec = ProblemSpec(
            name=str(data.get("name", Path(source).stem if source else "problem")),
            uncertainty=uncertainty,
            noise=noise,
            payoff=payoff,
        )
        sections: dict[str, Any] = {}
        for key, model in (("grid", GridSection), ("pde", PdeSection), ("simulation", SimulationSection)):
            current = (key,)
            sections[key] = model.model_validate(data.get(key) or {})
    except ValidationError as e:
        first = e.errors()[0]
        path = current + tuple(first["loc"])
        where = ".".join(str(p) for p in path) or "<root>"
        raise ConfigError(f"{where}: {first['msg']}", _line_of(tree, path)) from e
    except ValueError as e:
        raise ConfigError(f"{'.'.join(current) or '<root>'}: {e}", _line_of(tree, current)) from e

    problem = ProblemFile(spec=spec, source=source, **sections)
    logger.debug("Loaded problem %s from %s", spec.name, source or "<string>")
    return problem


def load_problem(path: str | Path) -> ProblemFile:
    """Read and parse a YAML problem file.

    Raises:
        ConfigError: If the file is missing or invalid
    """
    file = Path(path)
    if not file.is_file():
        raise ConfigError(f"problem file not found: {file}")
    return parse_problem(file.read_text(encoding="utf-8"), source=str(file))
