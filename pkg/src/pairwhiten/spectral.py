"""Closed-form spectral core for 2x2 correlation whitening blocks.

Every matrix handled here is a 2x2 symmetric correlation matrix
``[[1, r], [r, 1]]``, whose eigenstructure is known exactly: eigenvalues
``1 + r`` and ``1 - r`` with eigenvectors ``(1, 1)/sqrt(2)`` and
``(1, -1)/sqrt(2)``.  The whitening block is the inverse square root of
that matrix, optionally blended with the identity to soften the
transform.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

#: Eigenvalues are floored at this value before inversion so that the
#: transform stays finite as |r| -> 1.
EIG_FLOOR = 1e-6

_INV_SQRT2 = 1.0 / math.sqrt(2.0)


def check_correlation(r: float) -> float:
    """Validate a correlation coefficient and return it as a float.

    Raises ValueError if ``r`` is not finite or lies outside [-1, 1].
    """
    r = float(r)
    if not math.isfinite(r):
        raise ValueError(f"correlation must be finite, got {r!r}")
    if abs(r) > 1.0:
        raise ValueError(f"correlation must lie in [-1, 1], got {r!r}")
    return r


def eig_sym_2x2(r: float) -> tuple[np.ndarray, np.ndarray]:
    """Eigendecomposition of the correlation matrix ``[[1, r], [r, 1]]``.

    Returns
    -------
    eigenvalues : ndarray, shape (2,)
        ``(1 + r, 1 - r)``, paired with the eigenvector columns below.
    eigenvectors : ndarray, shape (2, 2)
        Orthonormal columns ``(1, 1)/sqrt(2)`` and ``(1, -1)/sqrt(2)``.
        Sign convention: the first component of each column is
        non-negative.
    """
    r = check_correlation(r)
    eigenvalues = np.array([1.0 + r, 1.0 - r])
    eigenvectors = np.array(
        [[_INV_SQRT2, _INV_SQRT2], [_INV_SQRT2, -_INV_SQRT2]]
    )
    return eigenvalues, eigenvectors


@dataclass(frozen=True)
class WhiteningBlock:
    """Symmetric 2x2 whitening block ``[[w11, w12], [w12, w11]]``.

    ``floored`` records whether the eigenvalue floor was hit while
    building the block (near-singular correlation).
    """

    w11: float
    w12: float
    floored: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.w11) and math.isfinite(self.w12)):
            raise ValueError("whitening block entries must be finite")
        if self.w11 <= 0.0:
            raise ValueError(f"diagonal entry must be positive, got {self.w11!r}")
        if self.w11 <= self.w12:
            raise ValueError(
                f"diagonal entry must exceed off-diagonal, got "
                f"w11={self.w11!r}, w12={self.w12!r}"
            )

    def as_matrix(self) -> np.ndarray:
        return np.array([[self.w11, self.w12], [self.w12, self.w11]])

    @staticmethod
    def identity() -> "WhiteningBlock":
        return WhiteningBlock(1.0, 0.0)


def zca_cor_block(r: float, eps: float = EIG_FLOOR) -> WhiteningBlock:
    """Inverse-square-root whitening block for a correlated pair.

    Computes ``U diag(l)^(-1/2) U^T`` for the correlation matrix
    ``[[1, r], [r, 1]]`` in closed form:

        w11 = ((1 + r)^(-1/2) + (1 - r)^(-1/2)) / 2
        w12 = ((1 + r)^(-1/2) - (1 - r)^(-1/2)) / 2

    Eigenvalues below ``eps`` are floored before inversion, which keeps
    the block finite for |r| -> 1; flooring is recorded on the returned
    block rather than raised.
    """
    r = check_correlation(r)
    if eps <= 0.0:
        raise ValueError(f"eigenvalue floor must be positive, got {eps!r}")
    lo, hi = 1.0 + r, 1.0 - r
    floored = lo < eps or hi < eps
    lo = max(lo, eps)
    hi = max(hi, eps)
    a = 1.0 / math.sqrt(lo)
    b = 1.0 / math.sqrt(hi)
    return WhiteningBlock(w11=0.5 * (a + b), w12=0.5 * (a - b), floored=floored)


def regularize_block(block: WhiteningBlock, alpha: float) -> WhiteningBlock:
    """Blend a whitening block with the identity: ``alpha*W + (1-alpha)*I``.

    ``alpha = 0`` returns the identity block, ``alpha = 1`` returns
    ``block`` unchanged.  The blend keeps the diagonal strictly above
    the off-diagonal for every ``alpha`` in [0, 1], so weight-order
    preservation survives regularization.
    """
    alpha = float(alpha)
    if not 0.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [0, 1], got {alpha!r}")
    return replace(
        block,
        w11=alpha * block.w11 + (1.0 - alpha),
        w12=alpha * block.w12,
    )
