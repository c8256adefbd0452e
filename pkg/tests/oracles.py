"""Independent computation paths used to cross-check the library.

Nothing here imports from the package's numerical core: the eigensolver
is an iterative Jacobi sweep, ROC-AUC is trapezoidal integration of the
empirical curve, gradients come from central differences and t-test
p-values from mpmath's incomplete beta.
"""

import mpmath
import numpy as np


def jacobi_eigh(matrix, max_sweeps=100, tol=1e-15):
    """Symmetric eigendecomposition by cyclic Jacobi rotations.

    Returns (eigenvalues, eigenvectors) with eigenvector columns, in no
    particular order.  Purely iterative: no closed forms, no LAPACK.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    for _ in range(max_sweeps):
        off = np.sqrt(np.sum(np.tril(a, -1) ** 2))
        if off < tol:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                if abs(a[p, q]) < 1e-300:
                    continue
                tau = (a[q, q] - a[p, p]) / (2.0 * a[p, q])
                t = np.sign(tau) / (abs(tau) + np.sqrt(1.0 + tau * tau))
                if tau == 0.0:
                    t = 1.0
                c = 1.0 / np.sqrt(1.0 + t * t)
                s = t * c
                rot = np.eye(n)
                rot[p, p] = rot[q, q] = c
                rot[p, q] = s
                rot[q, p] = -s
                a = rot.T @ a @ rot
                v = v @ rot
    return np.diag(a).copy(), v


def whitening_matrix_brute_force(r, eps=1e-6):
    """U diag(l)^(-1/2) U^T for [[1, r], [r, 1]] via the Jacobi solver."""
    values, vectors = jacobi_eigh(np.array([[1.0, r], [r, 1.0]]))
    values = np.maximum(values, eps)
    return vectors @ np.diag(values ** -0.5) @ vectors.T


def roc_auc_trapezoid(scores, labels):
    """Area under the empirical ROC curve by trapezoidal integration."""
    scores = np.asarray(scores, dtype=float)
    labels = np.asarray(labels, dtype=int)
    pos = labels == 1
    n_pos = int(pos.sum())
    n_neg = labels.shape[0] - n_pos
    tpr = [0.0]
    fpr = [0.0]
    for threshold in np.unique(scores)[::-1]:
        predicted = scores >= threshold
        tpr.append(float((predicted & pos).sum()) / n_pos)
        fpr.append(float((predicted & ~pos).sum()) / n_neg)
    return float(np.trapezoid(tpr, fpr))


def central_difference_gradient(f, x, h=1e-6):
    """Per-coordinate central finite differences of a scalar function."""
    x = np.asarray(x, dtype=float)
    grad = np.empty_like(x)
    for i in range(x.shape[0]):
        step = np.zeros_like(x)
        step[i] = h
        grad[i] = (f(x + step) - f(x - step)) / (2.0 * h)
    return grad


def student_t_two_sided_p(t, df):
    """Two-sided Student-t p-value via the regularized incomplete beta."""
    t = abs(float(t))
    x = df / (df + t * t)
    return float(mpmath.betainc(df / 2.0, 0.5, 0, x, regularized=True))
