"""Fit-on-train confound residualization and standardization.

Both transforms follow the fit/transform split: statistics are
estimated once from training rows and applied unchanged afterwards, so
held-out rows can never influence a fitted parameter.

Residualization is "adjusted": each feature is regressed on confounds
AND protected columns jointly, but only the confound (plus intercept)
contribution is subtracted.  Fitting the protected columns alongside
keeps their variance out of the confound coefficients, so the signal a
downstream classifier needs survives the cleanup.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ConfigError
from .table import FeatureTable


@dataclass(frozen=True)
class ConfoundSpec:
    """Which table columns are confounds and which must be kept.

    ``continuous`` enter the design as-is, ``categorical`` are one-hot
    encoded against training levels (first level dropped), and
    ``protected`` columns (numeric; typically the diagnosis label) are
    fitted but never removed.
    """

    continuous: tuple[str, ...] = ()
    categorical: tuple[str, ...] = ()
    protected: tuple[str, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, "continuous", tuple(self.continuous))
        object.__setattr__(self, "categorical", tuple(self.categorical))
        object.__setattr__(self, "protected", tuple(self.protected))
        groups = [self.continuous, self.categorical, self.protected]
        flat = [c for g in groups for c in g]
        if len(set(flat)) != len(flat):
            dupes = sorted({c for c in flat if flat.count(c) > 1})
            raise ConfigError(f"confound column(s) {dupes} listed more than once")


class Residualizer:
    """OLS confound removal fitted on training rows only.

    Attributes set by :meth:`fit` carry a trailing underscore; ``apply``
    via :meth:`transform` reuses them and never re-estimates anything.
    """

    def __init__(self, spec: ConfoundSpec):
        self.spec = spec

    def fit(self, table: FeatureTable) -> "Residualizer":
        frame = table.frame
        for col in self.spec.continuous + self.spec.categorical + self.spec.protected:
            if col not in frame.columns:
                raise ConfigError(f"confound column {col!r} not present in table")

        self.levels_ = {
            col: sorted(map(str, np.unique(frame[col].to_numpy(str))))
            for col in self.spec.categorical
        }
        self.protected_means_ = {
            col: float(np.mean(frame[col].to_numpy(dtype=float)))
            for col in self.spec.protected
        }

        design, names = self._design(frame, with_protected=True)
        n, p = design.shape
        if n <= p:
            raise ValueError(
                f"need more training rows than design columns ({n} rows, "
                f"{p} columns)"
            )
        self._check_rank(design, names)

        features = table.features()
        coef, *_ = np.linalg.lstsq(design, features, rcond=None)
        self.coef_ = coef
        self.design_names_ = names
        # protected columns sit at the end of the design; everything
        # before them (intercept included) is removed at apply time
        self.n_removal_ = p - len(self.spec.protected)
        self.n_fit_ = n
        return self

    def transform(self, table: FeatureTable) -> np.ndarray:
        if not hasattr(self, "coef_"):
            raise ValueError("residualizer must be fitted before transform")
        design, _ = self._design(table.frame, with_protected=False)
        return table.features() - design @ self.coef_[: self.n_removal_]

    def fit_transform(self, table: FeatureTable) -> np.ndarray:
        return self.fit(table).transform(table)

    def _design(self, frame, with_protected: bool):
        n = len(frame)
        cols = [np.ones(n)]
        names = ["intercept"]
        for col in self.spec.continuous:
            cols.append(frame[col].to_numpy(dtype=float))
            names.append(col)
        for col in self.spec.categorical:
            values = frame[col].to_numpy(str)
            levels = self.levels_[col]
            unseen = sorted(set(values) - set(levels))
            if unseen:
                raise ValueError(
                    f"categorical column {col!r} has level(s) {unseen} "
                    f"not seen during fitting"
                )
            for level in levels[1:]:  # reference coding, first level dropped
                cols.append((values == level).astype(float))
                names.append(f"{col}={level}")
        if with_protected:
            for col in self.spec.protected:
                centered = frame[col].to_numpy(dtype=float) - self.protected_means_[col]
                cols.append(centered)
                names.append(f"{col} (protected)")
        return np.column_stack(cols), names

    @staticmethod
    def _check_rank(design: np.ndarray, names: list[str], tol: float = 1e-8) -> None:
        n, p = design.shape
        if np.linalg.matrix_rank(design) == p:
            return
        # name the offenders: greedy projection onto the preceding columns
        basis = np.empty((n, 0))
        collinear = []
        for j in range(p):
            col = design[:, j]
            if basis.shape[1]:
                coef, *_ = np.linalg.lstsq(basis, col, rcond=None)
                resid = col - basis @ coef
            else:
                resid = col
            norm = np.linalg.norm(resid)
            if norm <= tol * max(np.linalg.norm(col), 1.0):
                collinear.append(names[j])
            else:
                basis = np.column_stack([basis, col])
        raise ValueError(
            f"rank-deficient confound design; collinear column(s): {collinear}"
        )


class Scaler:
    """Per-column standardization with population (divide-by-n) stds."""

    def fit(self, X: np.ndarray, names=None) -> "Scaler":
        X = np.asarray(X, dtype=float)
        if X.ndim != 2 or X.shape[0] < 1:
            raise ValueError("expected a non-empty 2-D array")
        self.mean_ = X.mean(axis=0)
        self.std_ = X.std(axis=0)  # ddof=0 throughout the package
        dead = np.flatnonzero(self.std_ == 0.0)
        if dead.size:
            labels = [names[i] if names is not None else i for i in dead]
            raise ValueError(f"constant feature column(s) {labels}; cannot scale")
        return self

    def transform(self, X: np.ndarray) -> np.ndarray:
        if not hasattr(self, "mean_"):
            raise ValueError("scaler must be fitted before transform")
        X = np.asarray(X, dtype=float)
        if X.shape[1] != self.mean_.shape[0]:
            raise ValueError(
                f"column count mismatch: fitted {self.mean_.shape[0]}, "
                f"got {X.shape[1]}"
            )
        return (X - self.mean_) / self.std_

    def fit_transform(self, X: np.ndarray, names=None) -> np.ndarray:
        return self.fit(X, names=names).transform(X)


def assert_standardized(X: np.ndarray, tol: float = 1e-6) -> None:
    """Raise unless every column has mean ~0 and population variance ~1."""
    X = np.asarray(X, dtype=float)
    means = X.mean(axis=0)
    variances = X.var(axis=0)
    worst_mean = int(np.argmax(np.abs(means)))
    worst_var = int(np.argmax(np.abs(variances - 1.0)))
    if abs(means[worst_mean]) > tol:
        raise ValueError(
            f"column {worst_mean} has mean {means[worst_mean]:.3g}; "
            f"input must be standardized (|mean| <= {tol:g})"
        )
    if abs(variances[worst_var] - 1.0) > tol:
        raise ValueError(
            f"column {worst_var} has variance {variances[worst_var]:.6g}; "
            f"input must be standardized (|var - 1| <= {tol:g})"
        )
