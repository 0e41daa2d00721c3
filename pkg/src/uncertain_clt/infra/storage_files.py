"""Directory storage backend: JSON reports, CSV tables, JSON metadata sidecars."""

import json
import logging
from pathlib import Path
from typing import Any

import numpy as np
import pandas as pd
from pydantic import BaseModel

from src.uncertain_clt.core.errors import PolicyMismatchError
from src.uncertain_clt.core.grid import FeedbackPolicy, SpatialGrid, ValueGrid
from src.uncertain_clt.infra.storage import ResultStorage

logger = logging.getLogger(__name__)

META_SUFFIX = ".meta.json"


class FileResultStorage(ResultStorage):
    """Results as files in one directory.

    ``<name>.json`` holds reports, ``<name>.csv`` tables, value slices and
    policies; value and policy CSVs carry a ``<name>.meta.json`` sidecar
    with the grid (and extreme matrices) needed to rebuild them.
    """

    def __init__(self, root: str = "results"):
        """Initialize storage.

        Args:
            root: Output directory
        """
        self.root = Path(root)

    def initialize(self) -> None:
        """Create the output directory if needed."""
        self.root.mkdir(parents=True, exist_ok=True)

    def _path(self, name: str, suffix: str) -> Path:
        return self.root / f"{name}{suffix}"

    def _write_meta(self, name: str, meta: dict[str, Any]) -> None:
        with open(self._path(name, META_SUFFIX), "w") as f:
            json.dump(meta, f, indent=2)

    def save_report(self, name: str, report: BaseModel) -> Path:
        """Save a report as indented JSON."""
        path = self._path(name, ".json")
        path.write_text(report.model_dump_json(indent=2), encoding="utf-8")
        logger.info("Wrote %s", path)
        return path

    def load_report(self, name: str) -> dict[str, object] | None:
        """Load a JSON report."""
        path = self._path(name, ".json")
        if not path.exists():
            return None
        with open(path) as f:
            data: dict[str, object] = json.load(f)
        return data

    def save_table(self, name: str, table: pd.DataFrame) -> Path:
        """Save a table as CSV without the index."""
        path = self._path(name, ".csv")
        table.to_csv(path, index=False)
        logger.info("Wrote %s", path)
        return path

    def load_table(self, name: str) -> pd.DataFrame | None:
        """Load a CSV table."""
        path = self._path(name, ".csv")
        if not path.exists():
            return None
        return pd.read_csv(path)

    def save_values(self, name: str, values: ValueGrid) -> Path:
        """Save slices in long format (j, t, x1..xd, value) plus the grid sidecar."""
        path = self.save_table(name, values.to_frame())
        self._write_meta(
            name,
            {"kind": "values", "grid": values.grid.model_dump(), "bound": values.bound},
        )
        return path

    def save_policy(self, name: str, policy: FeedbackPolicy) -> Path:
        """Save a policy in long format (j, t, x1..xd, index) plus grid and matrices."""
        path = self.save_table(name, policy.to_frame())
        self._write_meta(
            name,
            {
                "kind": "policy",
                "steps": policy.steps,
                "grid": policy.grid.model_dump(),
                "extremes": [a.tolist() for a in policy.extremes],
            },
        )
        return path

    def load_policy(self, name: str) -> FeedbackPolicy:
        """Rebuild a policy from its CSV and sidecar.

        ``name`` may also be a path to the CSV file.
        """
        candidate = Path(name)
        csv_path = candidate if candidate.suffix == ".csv" else self._path(name, ".csv")
        meta_path = csv_path.with_name(csv_path.stem + META_SUFFIX)
        if not csv_path.exists() or not meta_path.exists():
            raise PolicyMismatchError(f"policy file or its metadata not found: {csv_path}")
        try:
            with open(meta_path) as f:
                meta = json.load(f)
            if meta.get("kind") != "policy":
                raise PolicyMismatchError(f"{csv_path} does not hold a policy")
            grid = SpatialGrid.model_validate(meta["grid"])
            steps = int(meta["steps"])
            frame = pd.read_csv(csv_path)
            expected = steps * int(np.prod(grid.shape))
            if len(frame) != expected:
                raise PolicyMismatchError(
                    f"policy table has {len(frame)} rows, expected {expected} "
                    f"for {steps} steps on grid {grid.nodes}"
                )
            frame = frame.sort_values("j", kind="stable")
            indices = frame["index"].to_numpy(dtype=np.int16).reshape((steps, *grid.shape))
            times = frame.groupby("j", sort=True)["t"].first().to_numpy(dtype=float)
            extremes = [np.array(a, dtype=float) for a in meta["extremes"]]
            return FeedbackPolicy(indices=indices, times=times, grid=grid, extremes=extremes)
        except (KeyError, ValueError) as e:
            if isinstance(e, PolicyMismatchError):
                raise
            raise PolicyMismatchError(f"malformed policy {csv_path}: {e}") from e

    def list_results(self) -> list[str]:
        """Names of the stored reports and tables."""
        if not self.root.exists():
            return []
        names = {
            p.name.removesuffix(".json").removesuffix(".csv")
            for p in self.root.iterdir()
            if p.suffix in (".json", ".csv") and not p.name.endswith(META_SUFFIX)
        }
        return sorted(names)
