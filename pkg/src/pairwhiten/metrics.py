"""Classification metrics and the fold-wise significance test."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy import stats


def _check_two_classes(labels: np.ndarray) -> np.ndarray:
    labels = np.asarray(labels)
    present = np.unique(labels)
    if present.size != 2 or not set(present) <= {0, 1}:
        raise ValueError(
            f"need both classes 0 and 1 present, found {present.tolist()}"
        )
    return labels.astype(int)


def roc_auc(scores, labels) -> float:
    """Rank-based ROC-AUC: fraction of positive/negative pairs ranked
    correctly, ties counted half (the Mann-Whitney U normalization)."""
    scores = np.asarray(scores, dtype=float)
    labels = _check_two_classes(labels)
    if scores.shape[0] != labels.shape[0]:
        raise ValueError("scores and labels must have equal length")
    n_pos = int(labels.sum())
    n_neg = labels.shape[0] - n_pos
    ranks = stats.rankdata(scores)  # average ranks on ties
    u = ranks[labels == 1].sum() - n_pos * (n_pos + 1) / 2.0
    return float(u / (n_pos * n_neg))


def balanced_accuracy(scores, labels, threshold: float = 0.5) -> float:
    """Mean of sensitivity and specificity at a fixed score threshold."""
    scores = np.asarray(scores, dtype=float)
    labels = _check_two_classes(labels)
    if scores.shape[0] != labels.shape[0]:
        raise ValueError("scores and labels must have equal length")
    predicted = scores >= threshold
    pos = labels == 1
    sensitivity = float(predicted[pos].mean())
    specificity = float((~predicted[~pos]).mean())
    return 0.5 * (sensitivity + specificity)


@dataclass(frozen=True)
class PairedTestResult:
    metric: str
    differences: tuple[float, ...]
    t: float
    p: float
    df: int
    significant: bool  # at the 0.05 level
    degenerate: bool
    conclusion: str


def fold_t_test(
    metric_a, metric_b, metric: str = "", paired: bool = True
) -> PairedTestResult:
    """Student's t-test on per-fold metric values, paired by default.

    The paired form tests the per-fold differences a - b with k - 1
    degrees of freedom; ``paired=False`` falls back to the classic
    equal-variance two-sample form (df = 2k - 2) for comparison runs
    that did not share folds.  Zero-variance differences short-circuit
    to a degenerate result with finite ``t`` and ``p``.
    """
    a = np.asarray(metric_a, dtype=float)
    b = np.asarray(metric_b, dtype=float)
    if a.shape != b.shape or a.ndim != 1:
        raise ValueError("metric vectors must be 1-D and of equal length")
    k = a.shape[0]
    if k < 2:
        raise ValueError(f"need at least 2 folds, got {k}")
    diffs = tuple(float(x) for x in a - b)

    if paired:
        d = a - b
        df = k - 1
        mean = float(d.mean())
        sd = float(d.std(ddof=1))
        if sd == 0.0:
            if mean == 0.0:
                return PairedTestResult(
                    metric, diffs, 0.0, 1.0, df, False, True,
                    "no difference (per-fold values identical)",
                )
            return PairedTestResult(
                metric, diffs, 0.0, 0.0, df, True, True,
                f"constant non-zero difference of {mean:g} in every fold",
            )
        t = mean / (sd / math.sqrt(k))
    else:
        df = 2 * k - 2
        mean = float(a.mean() - b.mean())
        pooled = float(
            np.sqrt(((a.var(ddof=1) + b.var(ddof=1)) / 2.0) * (2.0 / k))
        )
        if pooled == 0.0:
            if mean == 0.0:
                return PairedTestResult(
                    metric, diffs, 0.0, 1.0, df, False, True,
                    "no difference (both samples constant and equal)",
                )
            return PairedTestResult(
                metric, diffs, 0.0, 0.0, df, True, True,
                f"constant samples differing by {mean:g}",
            )
        t = mean / pooled

    p = float(2.0 * stats.t.sf(abs(t), df))
    significant = p < 0.05
    verdict = (
        "significant difference at the 0.05 level"
        if significant
        else "no significant difference (p > 0.05)"
    )
    return PairedTestResult(metric, diffs, float(t), p, df, significant, False, verdict)
