"""L2-regularized binary logistic regression with a deterministic solver.

The objective is the mean logistic loss plus ``||w||^2 / (2*C*n)`` with
an unpenalized bias, i.e. the usual inverse-regularization convention
for ``C``.  It is minimized by damped Newton iterations with an Armijo
backtracking line search, started from zero weights, so identical
inputs always produce bit-identical models.
"""

from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy.linalg import cho_factor, cho_solve
from scipy.special import expit

from .folds import stratified_kfold
from .metrics import roc_auc

_MODEL_FORMAT = "pairwhiten.model"
_MODEL_VERSION = 1


@dataclass(frozen=True)
class LinearModel:
    """Trained linear classifier: score(x) = sigmoid(x . weights + bias)."""

    weights: np.ndarray
    bias: float
    C: float
    space: str = "whitened"
    converged: bool = True
    n_iter: int = 0
    grad_norm: float = 0.0

    def __post_init__(self):
        object.__setattr__(
            self, "weights", np.asarray(self.weights, dtype=float).reshape(-1)
        )
        if not np.all(np.isfinite(self.weights)) or not math.isfinite(self.bias):
            raise ValueError("model weights and bias must be finite")
        if self.C <= 0.0:
            raise ValueError(f"C must be positive, got {self.C!r}")

    def to_json(self) -> str:
        return json.dumps(
            {
                "format": _MODEL_FORMAT,
                "version": _MODEL_VERSION,
                "weights": self.weights.tolist(),
                "bias": self.bias,
                "C": self.C,
                "space": self.space,
                "converged": self.converged,
                "n_iter": self.n_iter,
                "grad_norm": self.grad_norm,
            },
            indent=2,
        )

    @classmethod
    def from_json(cls, text: str) -> "LinearModel":
        doc = json.loads(text)
        if doc.get("format") != _MODEL_FORMAT:
            raise ValueError(f"not a model artifact: format={doc.get('format')!r}")
        if doc.get("version") != _MODEL_VERSION:
            raise ValueError(f"unsupported model version {doc.get('version')!r}")
        return cls(
            weights=np.array(doc["weights"], dtype=float),
            bias=float(doc["bias"]),
            C=float(doc["C"]),
            space=doc["space"],
            converged=bool(doc["converged"]),
            n_iter=int(doc["n_iter"]),
            grad_norm=float(doc["grad_norm"]),
        )

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "LinearModel":
        return cls.from_json(Path(path).read_text())


def _validate_training_inputs(X, y, C):
    X = np.asarray(X, dtype=float)
    y = np.asarray(y)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise ValueError("X must be (n, d) and y a matching length-n vector")
    if not np.all(np.isfinite(X)):
        raise ValueError("X contains non-finite values")
    present = np.unique(y)
    if present.size != 2 or not set(present) <= {0, 1}:
        raise ValueError(f"y must contain both classes 0 and 1, found {present.tolist()}")
    if C <= 0.0:
        raise ValueError(f"C must be positive, got {C!r}")
    return X, y.astype(float)


def objective_and_grad(weights, bias, X, y, C):
    """Regularized mean logistic loss and its analytic gradient.

    Returns ``(value, grad_weights, grad_bias)``; exposed so the
    gradient can be cross-checked against finite differences.
    """
    X, y = _validate_training_inputs(X, y, C)
    w = np.asarray(weights, dtype=float).reshape(-1)
    n = X.shape[0]
    z = X @ w + bias
    signed = np.where(y == 1.0, z, -z)
    value = float(np.logaddexp(0.0, -signed).mean() + (w @ w) / (2.0 * C * n))
    p = expit(z)
    grad_w = X.T @ (p - y) / n + w / (C * n)
    grad_b = float((p - y).mean())
    return value, grad_w, grad_b


def train_logreg(
    X, y, C: float, tol: float = 1e-8, max_iter: int = 500
) -> LinearModel:
    """Fit the classifier by damped Newton steps from a zero start.

    Convergence means the max-norm of the full gradient dropped below
    ``tol``; hitting ``max_iter`` first yields a warning and a model
    flagged ``converged=False`` rather than an error.
    """
    X, y = _validate_training_inputs(X, y, C)
    n, d = X.shape
    A = np.hstack([X, np.ones((n, 1))])
    reg = np.append(np.full(d, 1.0 / (C * n)), 0.0)  # bias unpenalized

    def value(wb):
        z = A @ wb
        signed = np.where(y == 1.0, z, -z)
        return float(np.logaddexp(0.0, -signed).mean() + 0.5 * (reg * wb * wb).sum())

    wb = np.zeros(d + 1)
    current = value(wb)
    grad_norm = math.inf
    iterations = 0
    converged = False
    for iterations in range(1, max_iter + 1):
        p = expit(A @ wb)
        grad = A.T @ (p - y) / n + reg * wb
        grad_norm = float(np.max(np.abs(grad)))
        if grad_norm < tol:
            converged = True
            iterations -= 1
            break
        s = np.maximum(p * (1.0 - p), 1e-10)
        hessian = (A * s[:, None]).T @ A / n + np.diag(reg)
        step = cho_solve(cho_factor(hessian), -grad)
        # Armijo backtracking keeps the damped step strictly decreasing
        slope = float(grad @ step)
        t = 1.0
        for _ in range(60):
            candidate = wb + t * step
            if value(candidate) <= current + 1e-4 * t * slope:
                break
            t *= 0.5
        wb = wb + t * step
        current = value(wb)
    if not converged:
        warnings.warn(
            f"logistic regression did not reach gradient tolerance {tol:g} "
            f"within {max_iter} iterations (max |grad| = {grad_norm:.3g})",
            RuntimeWarning,
        )
    return LinearModel(
        weights=wb[:d],
        bias=float(wb[d]),
        C=float(C),
        converged=converged,
        n_iter=iterations,
        grad_norm=grad_norm,
    )


def predict_scores(model: LinearModel, X) -> np.ndarray:
    """Per-row positive-class probabilities."""
    X = np.asarray(X, dtype=float)
    if X.ndim != 2 or X.shape[1] != model.weights.shape[0]:
        raise ValueError(
            f"expected (n, {model.weights.shape[0]}) inputs, got {X.shape}"
        )
    return expit(X @ model.weights + model.bias)


@dataclass(frozen=True)
class GridSearchResult:
    grid: tuple[float, ...]
    scores: tuple[float, ...]  # mean inner-validation score per candidate
    selected: float


def grid_search_C(
    X,
    y,
    grid,
    inner_folds: int = 5,
    seed: int = 0,
    metric=roc_auc,
    tol: float = 1e-8,
    max_iter: int = 500,
) -> GridSearchResult:
    """Pick C by stratified inner cross-validation on the training split.

    Ties go to the smaller C.  A singleton grid is returned immediately
    with no inner fits (``scores`` stays empty).
    """
    grid = tuple(float(c) for c in grid)
    if not grid:
        raise ValueError("C grid must not be empty")
    for c in grid:
        if c <= 0.0:
            raise ValueError(
                f"C grid entry {c!r} is not positive; inverse-regularization "
                f"strengths must be > 0"
            )
    if len(grid) == 1:
        return GridSearchResult(grid, (), grid[0])
    if inner_folds < 2:
        raise ValueError(f"inner fold count must be at least 2, got {inner_folds}")

    y = np.asarray(y)
    assignment = stratified_kfold(y, inner_folds, seed)
    splits = [
        (assignment.train_rows(f), assignment.test_rows(f))
        for f in range(inner_folds)
    ]
    X = np.asarray(X, dtype=float)
    scores = []
    for c in grid:
        fold_scores = []
        for train_rows, val_rows in splits:
            model = train_logreg(
                X[train_rows], y[train_rows], c, tol=tol, max_iter=max_iter
            )
            fold_scores.append(metric(predict_scores(model, X[val_rows]), y[val_rows]))
        scores.append(float(np.mean(fold_scores)))

    selected = grid[0]
    best = scores[0]
    for c, s in zip(grid[1:], scores[1:]):
        if s > best or (s == best and c < selected):
            selected, best = c, s
    return GridSearchResult(grid, tuple(scores), selected)
