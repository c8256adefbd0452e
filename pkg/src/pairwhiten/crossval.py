"""Stratified cross-validation over the full preprocessing pipeline.

Per fold, in order: confound residualization, standardization, optional
pairwise whitening (plus a post-whitening rescale when any stage has
alpha < 1), inner-CV grid search for C, final model fit, held-out
scoring.  Every statistic is fitted on the fold's training rows only.
Weights are mapped back to the (standardized) feature axes before
aggregation so whitened and baseline runs are directly comparable.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
import pandas as pd

from .folds import FoldAssignment, stratified_kfold
from .logistic import GridSearchResult, LinearModel, grid_search_C, predict_scores, train_logreg
from .manifest import PairManifest, manifest_digest, pair_indices
from .metrics import PairedTestResult, balanced_accuracy, fold_t_test, roc_auc
from .preprocess import ConfoundSpec, Residualizer, Scaler
from .table import FeatureTable
from .whitener import (
    FittedWhitener,
    WeightVector,
    check_order_preservation,
    fit_whitener,
    pair_correlation,
)

#: Inverse-regularization strengths searched by default.  Entries must be
#: strictly positive; a literal 0 is rejected by grid_search_C.
DEFAULT_C_GRID: tuple[float, ...] = (0.001, 0.01, 0.1, 1.0, 10.0)

_REPORT_FORMAT = "pairwhiten.cv_report"
_REPORT_VERSION = 1


@dataclass
class FoldFit:
    """Everything fitted on one fold's training rows."""

    residualizer: Residualizer
    scaler: Scaler
    whitener: FittedWhitener | None
    post_scaler: Scaler | None
    grid_result: GridSearchResult
    model: LinearModel
    train_standardized: np.ndarray
    train_transformed: np.ndarray


def fit_fold(
    table: FeatureTable,
    train_rows: np.ndarray,
    manifest: PairManifest | None,
    confounds: ConfoundSpec,
    grid=DEFAULT_C_GRID,
    inner_folds: int = 5,
    seed: int = 0,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> FoldFit:
    """Fit the full pipeline on the given training rows only.

    Rows outside ``train_rows`` are never touched, so mutating them can
    not change any fitted parameter.
    """
    train = table.take(train_rows)
    residualizer = Residualizer(confounds).fit(train)
    scaler = Scaler().fit(residualizer.transform(train), names=table.feature_names)
    standardized = scaler.transform(residualizer.transform(train))

    whitener = None
    post_scaler = None
    transformed = standardized
    if manifest is not None:
        whitener = fit_whitener(standardized, manifest)
        transformed = whitener.transform(standardized)
        if np.abs(transformed.var(axis=0) - 1.0).max() > 1e-9:
            # a trailing partial (alpha < 1) stage leaves pair variances
            # off one; refit a final standardizer on the training output
            post_scaler = Scaler().fit(transformed)
            transformed = post_scaler.transform(transformed)

    labels = train.labels()
    grid_result = grid_search_C(
        transformed, labels, grid, inner_folds=inner_folds, seed=seed,
        tol=tol, max_iter=max_iter,
    )
    model = train_logreg(transformed, labels, grid_result.selected, tol, max_iter)
    return FoldFit(
        residualizer, scaler, whitener, post_scaler, grid_result, model,
        standardized, transformed,
    )


def transform_rows(fit: FoldFit, table: FeatureTable, rows: np.ndarray) -> np.ndarray:
    """Apply a fold's fitted pipeline to arbitrary table rows."""
    sub = table.take(rows)
    X = fit.scaler.transform(fit.residualizer.transform(sub))
    if fit.whitener is not None:
        X = fit.whitener.transform(X)
    if fit.post_scaler is not None:
        X = fit.post_scaler.transform(X)
    return X


def whitened_space_weights(fit: FoldFit) -> tuple[np.ndarray, float]:
    """Model weights expressed on the whitener's output axes (the
    post-whitening rescale, when present, is folded in)."""
    beta = fit.model.weights
    bias = fit.model.bias
    if fit.post_scaler is not None:
        scale = fit.post_scaler.std_
        shift = fit.post_scaler.mean_
        bias = bias - float((beta * (shift / scale)).sum())
        beta = beta / scale
    return beta, bias


def feature_space_weights(fit: FoldFit) -> tuple[np.ndarray, float]:
    """Model weights on the standardized feature axes: scoring rows with
    these reproduces the whitened-space predictions exactly."""
    beta, bias = whitened_space_weights(fit)
    if fit.whitener is None:
        return beta, bias
    theta = fit.whitener.project_weights(WeightVector(beta, "whitened")).values
    return theta, bias


def _fold_order_preserved(fit: FoldFit) -> bool:
    if fit.whitener is None:
        return True
    beta, _ = whitened_space_weights(fit)
    vector = WeightVector(beta, "whitened")
    return all(
        check.preserved
        for s in range(len(fit.whitener.stages))
        for check in check_order_preservation(fit.whitener, s, vector)
    )


@dataclass
class CvReport:
    """Per-fold metrics and feature-space weights for one pipeline arm."""

    pipeline: str  # "whitened" or "baseline"
    manifest_digest: str
    k: int
    seed: int
    feature_names: tuple[str, ...]
    fold_metrics: list[dict] = field(default_factory=list)
    weights: np.ndarray = None  # (k, d), feature space
    biases: tuple[float, ...] = ()
    pair_correlations: list[dict] = field(default_factory=list)
    order_preserved: bool = True

    def metric_values(self, name: str) -> np.ndarray:
        return np.array([m[name] for m in self.fold_metrics], dtype=float)

    def metric_mean(self, name: str) -> float:
        return float(self.metric_values(name).mean())

    def metric_std(self, name: str) -> float:
        return float(self.metric_values(name).std())  # ddof=0 convention

    def weight_mean(self) -> np.ndarray:
        return self.weights.mean(axis=0)

    def weight_std(self) -> np.ndarray:
        return self.weights.std(axis=0)

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": _REPORT_FORMAT,
                "version": _REPORT_VERSION,
                "pipeline": self.pipeline,
                "manifest_digest": self.manifest_digest,
                "k": self.k,
                "seed": self.seed,
                "feature_names": list(self.feature_names),
                "fold_metrics": self.fold_metrics,
                "weights": self.weights.tolist(),
                "biases": list(self.biases),
                "pair_correlations": self.pair_correlations,
                "order_preserved": self.order_preserved,
                "summary": {
                    "roc_auc_mean": self.metric_mean("roc_auc"),
                    "roc_auc_std": self.metric_std("roc_auc"),
                    "balanced_accuracy_mean": self.metric_mean("balanced_accuracy"),
                    "balanced_accuracy_std": self.metric_std("balanced_accuracy"),
                },
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "CvReport":
        doc = json.loads(text)
        if doc.get("format") != _REPORT_FORMAT:
            raise ValueError(f"not a cv report artifact: format={doc.get('format')!r}")
        if doc.get("version") != _REPORT_VERSION:
            raise ValueError(f"unsupported cv report version {doc.get('version')!r}")
        return cls(
            pipeline=doc["pipeline"],
            manifest_digest=doc["manifest_digest"],
            k=int(doc["k"]),
            seed=int(doc["seed"]),
            feature_names=tuple(doc["feature_names"]),
            fold_metrics=doc["fold_metrics"],
            weights=np.array(doc["weights"], dtype=float),
            biases=tuple(float(b) for b in doc["biases"]),
            pair_correlations=doc["pair_correlations"],
            order_preserved=bool(doc["order_preserved"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "CvReport":
        return cls.from_json(Path(path).read_text())


def run_pipeline(
    table: FeatureTable,
    manifest: PairManifest | None,
    confounds: ConfoundSpec,
    folds: FoldAssignment | int = 10,
    grid=DEFAULT_C_GRID,
    seed: int = 0,
    inner_folds: int = 5,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> CvReport:
    """Cross-validate one pipeline arm; ``manifest=None`` is the
    unwhitened baseline.

    Pass a shared :class:`FoldAssignment` when two arms are to be
    compared; an integer builds one from ``(labels, folds, seed)``.
    """
    labels = table.labels()
    if isinstance(folds, FoldAssignment):
        assignment = folds
    else:
        assignment = stratified_kfold(labels, folds, seed)
    if assignment.n != table.n:
        raise ValueError(
            f"fold assignment covers {assignment.n} rows but the table has {table.n}"
        )

    report = CvReport(
        pipeline="whitened" if manifest is not None else "baseline",
        manifest_digest=manifest_digest(manifest),
        k=assignment.k,
        seed=assignment.seed,
        feature_names=tuple(table.feature_names),
        weights=np.zeros((assignment.k, table.d)),
    )
    biases = []
    for f in range(assignment.k):
        try:
            fit = fit_fold(
                table, assignment.train_rows(f), manifest, confounds, grid,
                inner_folds=inner_folds, seed=seed * 100003 + f,
                tol=tol, max_iter=max_iter,
            )
            test_rows = assignment.test_rows(f)
            scores = predict_scores(fit.model, transform_rows(fit, table, test_rows))
            y_test = labels[test_rows]
            theta, bias = feature_space_weights(fit)
            report.fold_metrics.append(
                {
                    "fold": f,
                    "roc_auc": roc_auc(scores, y_test),
                    "balanced_accuracy": balanced_accuracy(scores, y_test),
                    "selected_C": fit.grid_result.selected,
                    "converged": fit.model.converged,
                    "n_iter": fit.model.n_iter,
                }
            )
            report.weights[f] = theta
            biases.append(bias)
            report.order_preserved &= _fold_order_preserved(fit)
            if manifest is not None:
                for si, label, a, b in pair_indices(manifest):
                    report.pair_correlations.append(
                        {
                            "fold": f,
                            "stage": si,
                            "label": label,
                            "feature_a": a.name,
                            "feature_b": b.name,
                            "r_before": pair_correlation(
                                fit.train_standardized, a.index, b.index
                            ),
                            "r_after": pair_correlation(
                                fit.train_transformed, a.index, b.index
                            ),
                        }
                    )
        except Exception as exc:
            raise RuntimeError(f"fold {f}: {exc}") from exc
    report.biases = tuple(biases)
    return report


@dataclass
class ComparisonResult:
    whitened: CvReport
    baseline: CvReport | None
    tests: list[PairedTestResult] = field(default_factory=list)


def run_comparison(
    table: FeatureTable,
    manifest: PairManifest,
    confounds: ConfoundSpec,
    k: int = 10,
    grid=DEFAULT_C_GRID,
    seed: int = 0,
    inner_folds: int = 5,
    baseline: bool = True,
    paired: bool = True,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> ComparisonResult:
    """Run whitened and baseline arms on one shared fold assignment and
    test the per-fold metric differences."""
    assignment = stratified_kfold(table.labels(), k, seed)
    whitened = run_pipeline(
        table, manifest, confounds, assignment, grid, seed, inner_folds, tol, max_iter
    )
    if not baseline:
        return ComparisonResult(whitened, None)
    base = run_pipeline(
        table, None, confounds, assignment, grid, seed, inner_folds, tol, max_iter
    )
    tests = [
        fold_t_test(
            whitened.metric_values(name), base.metric_values(name), name, paired=paired
        )
        for name in ("roc_auc", "balanced_accuracy")
    ]
    return ComparisonResult(whitened, base, tests)


def top_k_weights(report: CvReport, k: int = 7) -> list[tuple[str, float, float]]:
    """Features ranked by |mean weight| across folds, ties broken by name.

    Returns ``(feature, mean, std)`` rows; ``k`` beyond the feature
    count is clamped with a warning.
    """
    d = len(report.feature_names)
    if k > d:
        warnings.warn(f"k={k} exceeds the {d} available features; clamping", stacklevel=2)
        k = d
    mean = report.weight_mean()
    std = report.weight_std()
    order = sorted(range(d), key=lambda i: (-abs(mean[i]), report.feature_names[i]))
    return [
        (report.feature_names[i], float(mean[i]), float(std[i])) for i in order[:k]
    ]


def fold_correlation_matrices(
    table: FeatureTable,
    manifest: PairManifest,
    confounds: ConfoundSpec,
    assignment: FoldAssignment,
    columns: list[str],
    fold: int = 0,
) -> tuple[pd.DataFrame, pd.DataFrame]:
    """Correlation matrices of selected feature columns on one fold's
    training rows, before and after whitening (standardized features)."""
    index = {name: i for i, name in enumerate(table.feature_names)}
    missing = [c for c in columns if c not in index]
    if missing:
        raise ValueError(f"column(s) {missing} not in the feature table")
    selected = [index[c] for c in columns]

    train = table.take(assignment.train_rows(fold))
    residualizer = Residualizer(confounds).fit(train)
    standardized = Scaler().fit_transform(residualizer.transform(train))
    whitener = fit_whitener(standardized, manifest)
    transformed = whitener.transform(standardized)

    before = np.corrcoef(standardized[:, selected], rowvar=False)
    after = np.corrcoef(transformed[:, selected], rowvar=False)
    return (
        pd.DataFrame(before, index=columns, columns=columns),
        pd.DataFrame(after, index=columns, columns=columns),
    )
