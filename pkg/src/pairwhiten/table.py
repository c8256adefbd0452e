"""Tabular container for one-row-per-subject feature files.

The on-disk form is a plain delimited text file with a header row:
feature columns, confound columns and one binary label column.  Missing
values are rejected at ingestion; imputation is out of scope.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np
import pandas as pd

from .errors import ConfigError


@dataclass
class FeatureTable:
    """A frame plus the bookkeeping of which columns are features.

    ``frame`` holds every column (features, confounds, label); the
    feature columns must be numeric and the label column binary 0/1.
    """

    frame: pd.DataFrame
    feature_names: list[str]
    label: str = "diagnosis"

    def __post_init__(self):
        cols = list(self.frame.columns)
        if len(set(cols)) != len(cols):
            dupes = sorted({c for c in cols if cols.count(c) > 1})
            raise ConfigError(f"duplicate column name(s) {dupes}")
        missing = [c for c in self.feature_names + [self.label] if c not in cols]
        if missing:
            raise ConfigError(f"column(s) {missing} not present in table")
        if self.frame.isna().any().any():
            bad = sorted(self.frame.columns[self.frame.isna().any()])
            raise ConfigError(
                f"table contains missing values in column(s) {bad}; "
                f"complete tables are required"
            )
        for c in self.feature_names:
            if not np.issubdtype(self.frame[c].dtype, np.number):
                raise ConfigError(f"feature column {c!r} is not numeric")
        labels = set(np.unique(self.frame[self.label].to_numpy()))
        if not labels <= {0, 1}:
            raise ConfigError(
                f"label column {self.label!r} must be binary 0/1, "
                f"found values {sorted(labels)}"
            )

    @property
    def n(self) -> int:
        return len(self.frame)

    @property
    def d(self) -> int:
        return len(self.feature_names)

    def features(self) -> np.ndarray:
        return self.frame[self.feature_names].to_numpy(dtype=float)

    def labels(self) -> np.ndarray:
        return self.frame[self.label].to_numpy(dtype=int)

    def take(self, rows: np.ndarray) -> "FeatureTable":
        """Row subset as a new table (fresh index, shared column layout)."""
        sub = self.frame.iloc[np.asarray(rows)].reset_index(drop=True)
        return FeatureTable(sub, list(self.feature_names), self.label)


def read_feature_table(
    path: str | Path,
    label: str = "diagnosis",
    non_feature: Sequence[str] = (),
) -> FeatureTable:
    """Load a delimited table; every column not named in ``non_feature``
    or as the label is treated as a feature."""
    path = Path(path)
    if not path.exists():
        raise ConfigError(f"table file {path} does not exist")
    try:
        # round_trip parsing keeps write -> read exact at the bit level
        frame = pd.read_csv(path, float_precision="round_trip")
    except Exception as exc:
        raise ConfigError(f"could not parse table file {path}: {exc}") from exc
    reserved = set(non_feature) | {label}
    missing = sorted(r for r in reserved if r not in frame.columns)
    if missing:
        raise ConfigError(f"table {path} lacks required column(s) {missing}")
    feature_names = [c for c in frame.columns if c not in reserved]
    if not feature_names:
        raise ConfigError(f"table {path} has no feature columns")
    return FeatureTable(frame, feature_names, label)


def write_feature_table(table: FeatureTable, path: str | Path) -> None:
    """Write the full frame as CSV; floats keep repr precision so a
    write/read round trip reproduces the in-memory values exactly."""
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    table.frame.to_csv(path, index=False, lineterminator="\n")
