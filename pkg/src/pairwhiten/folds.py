"""Deterministic stratified fold assignment."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class FoldAssignment:
    """Fold id per row; every row belongs to exactly one fold."""

    fold_of: np.ndarray
    k: int
    seed: int

    def __post_init__(self):
        object.__setattr__(self, "fold_of", np.asarray(self.fold_of, dtype=int))

    @property
    def n(self) -> int:
        return self.fold_of.shape[0]

    def test_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of == fold)

    def train_rows(self, fold: int) -> np.ndarray:
        return np.flatnonzero(self.fold_of != fold)


def stratified_kfold(labels, k: int, seed: int) -> FoldAssignment:
    """Partition rows into k folds with per-class counts balanced to +/-1.

    Members of each class are shuffled with a seeded generator and dealt
    cyclically; a per-class starting offset keeps total fold sizes even.
    Identical inputs always produce the identical assignment.
    """
    labels = np.asarray(labels)
    if k < 2:
        raise ValueError(f"fold count must be at least 2, got {k}")
    rng = np.random.default_rng(seed)
    fold_of = np.empty(labels.shape[0], dtype=int)
    offset = 0
    for cls in np.unique(labels):
        members = np.flatnonzero(labels == cls)
        if members.size < k:
            raise ValueError(
                f"class {cls!r} has {members.size} member(s); "
                f"need at least {k} for {k}-fold stratification"
            )
        shuffled = rng.permutation(members)
        fold_of[shuffled] = (np.arange(members.size) + offset) % k
        offset = (offset + members.size) % k
    return FoldAssignment(fold_of, k, seed)
