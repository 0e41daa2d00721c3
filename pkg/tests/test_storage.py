"""Tests for the file storage backend."""

import json
from pathlib import Path

import numpy as np
import pandas as pd
import pytest

from src.uncertain_clt.core.dp_solver import dp_solve
from src.uncertain_clt.core.errors import PolicyMismatchError
from src.uncertain_clt.core.models import ProblemSpec, SolveReport
from src.uncertain_clt.infra.storage_files import FileResultStorage


@pytest.fixture
def storage(tmp_path: Path) -> FileResultStorage:
    """Initialized storage in a temporary directory."""
    store = FileResultStorage(str(tmp_path / "results"))
    store.initialize()
    return store


def test_initialize_creates_directory(tmp_path: Path) -> None:
    """Test the output directory is created, including parents."""
    store = FileResultStorage(str(tmp_path / "a" / "b"))
    store.initialize()
    assert (tmp_path / "a" / "b").is_dir()


def test_report_round_trip(storage: FileResultStorage) -> None:
    """Test a report is stored as JSON and read back as plain data."""
    report = SolveReport(
        solver="dp",
        spec_name="convex",
        value=4.0,
        n=4,
        steps=4,
        nodes=[49],
        half_widths=[12.0],
        runtime=0.01,
        config={"n": 4},
    )
    path = storage.save_report("convex_dp_n4", report)
    assert path.suffix == ".json"
    data = storage.load_report("convex_dp_n4")
    assert data is not None
    assert data["value"] == 4.0
    assert data["config"] == {"n": 4}
    assert storage.load_report("absent") is None


def test_table_round_trip(storage: FileResultStorage) -> None:
    """Test tables are written without the index."""
    table = pd.DataFrame({"n": [4, 16], "gap": [0.1, 0.025]})
    storage.save_table("study", table)
    loaded = storage.load_table("study")
    assert loaded is not None
    assert list(loaded.columns) == ["n", "gap"]
    assert loaded["gap"].tolist() == [0.1, 0.025]
    assert storage.load_table("absent") is None


def test_values_with_sidecar(storage: FileResultStorage, convex_spec: ProblemSpec) -> None:
    """Test value slices are stored long-format with their grid."""
    result = dp_solve(convex_spec, 2)
    storage.save_values("convex_values", result.values)
    frame = storage.load_table("convex_values")
    assert frame is not None
    assert list(frame.columns) == ["j", "t", "x1", "value"]
    assert len(frame) == 3 * result.values.grid.nodes[0]
    meta = json.loads((storage.root / "convex_values.meta.json").read_text())
    assert meta["kind"] == "values"
    assert meta["grid"]["nodes"] == result.values.grid.nodes


def test_policy_round_trip(storage: FileResultStorage, convex_spec: ProblemSpec) -> None:
    """Test a saved policy loads back identically, by name or by path."""
    policy = dp_solve(convex_spec, 3).policy
    path = storage.save_policy("convex_policy", policy)
    for key in ("convex_policy", str(path)):
        loaded = storage.load_policy(key)
        assert loaded.grid == policy.grid
        assert np.array_equal(loaded.indices, policy.indices)
        assert loaded.indices.dtype == np.int16
        assert np.allclose(loaded.times, policy.times)
        assert all(np.array_equal(a, b) for a, b in zip(loaded.extremes, policy.extremes))


def test_policy_missing(storage: FileResultStorage) -> None:
    """Test a missing policy raises PolicyMismatchError."""
    with pytest.raises(PolicyMismatchError, match="not found"):
        storage.load_policy("absent")


def test_policy_truncated(storage: FileResultStorage, convex_spec: ProblemSpec) -> None:
    """Test a table with missing rows is refused."""
    storage.save_policy("cut", dp_solve(convex_spec, 2).policy)
    path = storage.root / "cut.csv"
    frame = pd.read_csv(path)
    frame.iloc[:-1].to_csv(path, index=False)
    with pytest.raises(PolicyMismatchError, match="rows"):
        storage.load_policy("cut")


def test_values_are_not_a_policy(storage: FileResultStorage, convex_spec: ProblemSpec) -> None:
    """Test value files cannot be loaded as a policy."""
    storage.save_values("slices", dp_solve(convex_spec, 2).values)
    with pytest.raises(PolicyMismatchError):
        storage.load_policy("slices")


def test_list_results(storage: FileResultStorage, convex_spec: ProblemSpec) -> None:
    """Test sidecars are not listed as results."""
    storage.save_table("b_table", pd.DataFrame({"a": [1]}))
    storage.save_policy("a_policy", dp_solve(convex_spec, 1).policy)
    assert storage.list_results() == ["a_policy", "b_table"]
    assert FileResultStorage("does/not/exist").list_results() == []
