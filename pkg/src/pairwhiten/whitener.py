"""Multi-stage pairwise whitening fitted on training data.

Each stage carries, per declared column pair, a symmetric whitening
block ``(w11, w12)`` built from the pair's correlation on the stage's
input, plus the training standard deviations of the two columns at
stage entry.  The stage maps a pair ``(a, b)`` to

    z_a = alpha * (W x~)_a + (1 - alpha) * a,    x~ = (a/s_a, b/s_b)

with ``W`` the unregularized block; equivalently, using the stored
regularized block, ``z = W_alpha x~ + (1 - alpha) (x - x~)``.  The
first stage sees standardized input (scales are 1 up to rounding), so
this is the plain regularized transform there; later stages standardize
their own inputs, which makes a full (alpha = 1) stage decorrelate its
pairs exactly in the final output even after a partial earlier stage.
``alpha = 0`` is exactly the identity regardless of scales.

Stages are fitted sequentially: stage 2's correlations are measured on
stage 1's output.  Classifier weights trained on the whitened features
map back to the original feature axes by running the stage maps over
the weight vector in reverse order; predictions are identical in either
space.
"""

from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .manifest import PairManifest
from .preprocess import assert_standardized
from .spectral import EIG_FLOOR, WhiteningBlock, regularize_block, zca_cor_block

_ARTIFACT_FORMAT = "pairwhiten.whitener"
_ARTIFACT_VERSION = 1


@dataclass(frozen=True)
class WeightVector:
    """A length-d weight vector tagged with the space it lives in."""

    values: np.ndarray
    space: str  # "whitened" or "feature"

    def __post_init__(self):
        if self.space not in ("whitened", "feature"):
            raise ValueError(f"unknown weight space {self.space!r}")
        object.__setattr__(
            self, "values", np.asarray(self.values, dtype=float).reshape(-1)
        )


@dataclass(frozen=True)
class FittedStage:
    label: str
    alpha: float
    pairs: tuple[tuple[int, int], ...]
    correlations: tuple[float, ...]  # pair correlation of the stage input
    blocks: tuple[WhiteningBlock, ...]  # regularized (alpha already applied)
    scales: tuple[tuple[float, float], ...]  # training stds of the pair inputs

    def _arrays(self):
        ia = np.fromiter((p[0] for p in self.pairs), dtype=int)
        ib = np.fromiter((p[1] for p in self.pairs), dtype=int)
        w11 = np.array([blk.w11 for blk in self.blocks])
        w12 = np.array([blk.w12 for blk in self.blocks])
        sa = np.array([s[0] for s in self.scales])
        sb = np.array([s[1] for s in self.scales])
        return ia, ib, w11, w12, sa, sb

    def apply(self, X: np.ndarray) -> np.ndarray:
        """Mix the stage's pairs of data columns in place."""
        if not self.pairs:
            return X
        ia, ib, w11, w12, sa, sb = self._arrays()
        c = 1.0 - self.alpha
        a = X[..., ia]  # fancy indexing copies, so the mix below is safe
        b = X[..., ib]
        a_std = a / sa
        b_std = b / sb
        X[..., ia] = w11 * a_std + w12 * b_std + c * (a - a_std)
        X[..., ib] = w12 * a_std + w11 * b_std + c * (b - b_std)
        return X

    def apply_weights(self, v: np.ndarray) -> np.ndarray:
        """Left-multiply a weight vector by the stage matrix, in place.

        This is the column action of the same linear map ``apply`` uses
        on rows: mix first, then fold each output through its own
        column's input scale.
        """
        if not self.pairs:
            return v
        ia, ib, w11, w12, sa, sb = self._arrays()
        c = 1.0 - self.alpha
        va = v[ia]
        vb = v[ib]
        v[ia] = (w11 * va + w12 * vb) / sa + c * (va - va / sa)
        v[ib] = (w12 * va + w11 * vb) / sb + c * (vb - vb / sb)
        return v

    def apply_block_only(self, v: np.ndarray) -> np.ndarray:
        """Apply just the symmetric regularized blocks (no input scales).

        This is the map the pair-order guarantee is about.
        """
        if not self.pairs:
            return v
        ia, ib, w11, w12, _, _ = self._arrays()
        va = v[ia]
        vb = v[ib]
        v[ia] = w11 * va + w12 * vb
        v[ib] = w12 * va + w11 * vb
        return v

    def matrix(self, d: int) -> np.ndarray:
        """Dense d x d stage matrix (identity outside the pair blocks)."""
        m = np.eye(d)
        c = 1.0 - self.alpha
        for (i, j), blk, (s_a, s_b) in zip(self.pairs, self.blocks, self.scales):
            m[i, i] = (blk.w11 - c) / s_a + c
            m[j, j] = (blk.w11 - c) / s_b + c
            m[i, j] = blk.w12 / s_a  # coefficient of column i in output j
            m[j, i] = blk.w12 / s_b
        return m


@dataclass(frozen=True)
class FittedWhitener:
    n_features: int
    stages: tuple[FittedStage, ...]
    feature_names: tuple[str, ...] | None = None

    def transform(self, X: np.ndarray) -> np.ndarray:
        """Apply all stages in fitted order; rows are independent."""
        X = np.asarray(X, dtype=float)
        if X.shape[-1] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} columns, got {X.shape[-1]}"
            )
        out = X.copy()
        for stage in self.stages:
            stage.apply(out)
        return out

    def project_weights(self, beta: WeightVector) -> WeightVector:
        """Map whitened-space weights to the original feature axes.

        Returns the unique theta with ``X @ theta == transform(X) @ beta``
        for every X: the stage maps applied to the weight vector in
        reverse order (for a single stage on standardized input this is
        the symmetric block itself, i.e. the transposed-matrix form).
        """
        if beta.space != "whitened":
            raise ValueError(f"expected whitened-space weights, got {beta.space!r}")
        if beta.values.shape[0] != self.n_features:
            raise ValueError(
                f"expected {self.n_features} weights, got {beta.values.shape[0]}"
            )
        v = beta.values.copy()
        for stage in reversed(self.stages):
            stage.apply_weights(v)
        return WeightVector(v, "feature")

    def dense_matrix(self) -> np.ndarray:
        """Materialize the composed transform (diagnostics; small d only)."""
        return self.transform(np.eye(self.n_features))

    def to_json(self) -> str:
        doc = {
            "format": _ARTIFACT_FORMAT,
            "version": _ARTIFACT_VERSION,
            "n_features": self.n_features,
            "feature_names": list(self.feature_names) if self.feature_names else None,
            "stages": [
                {
                    "label": s.label,
                    "alpha": s.alpha,
                    "pairs": [list(p) for p in s.pairs],
                    "correlations": list(s.correlations),
                    "blocks": [[b.w11, b.w12] for b in s.blocks],
                    "floored": [b.floored for b in s.blocks],
                    "scales": [list(sc) for sc in s.scales],
                }
                for s in self.stages
            ],
        }
        return json.dumps(doc, indent=2)

    @classmethod
    def from_json(cls, text: str) -> "FittedWhitener":
        doc = json.loads(text)
        if doc.get("format") != _ARTIFACT_FORMAT:
            raise ValueError(f"not a whitener artifact: format={doc.get('format')!r}")
        if doc.get("version") != _ARTIFACT_VERSION:
            raise ValueError(f"unsupported whitener version {doc.get('version')!r}")
        stages = tuple(
            FittedStage(
                label=s["label"],
                alpha=float(s["alpha"]),
                pairs=tuple((int(i), int(j)) for i, j in s["pairs"]),
                correlations=tuple(float(r) for r in s["correlations"]),
                blocks=tuple(
                    WhiteningBlock(w11, w12, floored)
                    for (w11, w12), floored in zip(s["blocks"], s["floored"])
                ),
                scales=tuple((float(a), float(b)) for a, b in s["scales"]),
            )
            for s in doc["stages"]
        )
        names = doc.get("feature_names")
        return cls(int(doc["n_features"]), stages, tuple(names) if names else None)

    def save(self, path: str | Path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def load(cls, path: str | Path) -> "FittedWhitener":
        return cls.from_json(Path(path).read_text())


def pair_correlation(X: np.ndarray, i: int, j: int) -> float:
    """Population-convention sample correlation of two columns."""
    a = X[:, i] - X[:, i].mean()
    b = X[:, j] - X[:, j].mean()
    denom = np.sqrt((a * a).mean() * (b * b).mean())
    if denom == 0.0:
        raise ValueError(f"columns {i} and {j} have zero variance")
    r = float((a * b).mean() / denom)
    return min(1.0, max(-1.0, r))


def fit_whitener(
    X: np.ndarray,
    manifest: PairManifest,
    std_tol: float = 1e-6,
    eig_floor: float = EIG_FLOOR,
) -> FittedWhitener:
    """Fit stage blocks on standardized training data.

    Stage correlations and input scales are measured on the running
    (already partially transformed) matrix, so later stages decorrelate
    what earlier stages actually produce.
    """
    X = np.asarray(X, dtype=float)
    if X.ndim != 2:
        raise ValueError("expected a 2-D training matrix")
    if X.shape[0] < 3:
        raise ValueError(
            f"need at least 3 training rows to estimate correlations, "
            f"got {X.shape[0]}"
        )
    if X.shape[1] != manifest.n_features:
        raise ValueError(
            f"manifest declares {manifest.n_features} features but the "
            f"matrix has {X.shape[1]} columns"
        )
    assert_standardized(X, tol=std_tol)

    current = X.copy()
    fitted = []
    for stage in manifest.stages:
        correlations = []
        blocks = []
        scales = []
        for a, b in stage.pairs:
            r = pair_correlation(current, a.index, b.index)
            correlations.append(r)
            blocks.append(regularize_block(zca_cor_block(r, eps=eig_floor), stage.alpha))
            scales.append(
                (float(current[:, a.index].std()), float(current[:, b.index].std()))
            )
        fs = FittedStage(
            label=stage.label,
            alpha=stage.alpha,
            pairs=tuple((a.index, b.index) for a, b in stage.pairs),
            correlations=tuple(correlations),
            blocks=tuple(blocks),
            scales=tuple(scales),
        )
        fs.apply(current)
        fitted.append(fs)
    return FittedWhitener(manifest.n_features, tuple(fitted))


@dataclass(frozen=True)
class PairOrderCheck:
    pair: tuple[int, int]
    weights_in: tuple[float, float]
    weights_out: tuple[float, float]
    preserved: bool


def check_order_preservation(
    whitener: FittedWhitener, stage_index: int, beta: WeightVector
) -> list[PairOrderCheck]:
    """Diagnostic: does each pair keep its weight ordering through one
    stage's whitening block?

    ``beta`` is the whitened-space weight vector; the check back-projects
    it through the stages after ``stage_index`` and then compares pair
    orderings across that stage's symmetric block alone.  Blocks always
    satisfy ``w11 > w12``, so the contract is that the order survives.
    """
    if beta.space != "whitened":
        raise ValueError(f"expected whitened-space weights, got {beta.space!r}")
    if not 0 <= stage_index < len(whitener.stages):
        raise ValueError(
            f"stage index {stage_index} out of range for "
            f"{len(whitener.stages)} stage(s)"
        )
    v = beta.values.copy()
    for stage in reversed(whitener.stages[stage_index + 1:]):
        stage.apply_weights(v)
    stage = whitener.stages[stage_index]
    out = stage.apply_block_only(v.copy())
    checks = []
    for i, j in stage.pairs:
        din = v[i] - v[j]
        dout = out[i] - out[j]
        preserved = bool(np.sign(din) == np.sign(dout))
        checks.append(
            PairOrderCheck((i, j), (float(v[i]), float(v[j])),
                           (float(out[i]), float(out[j])), preserved)
        )
    return checks
