"""Cyclic Jacobi diagonalization for small symmetric matrices.

The fitter and the covariance handling only ever see matrices of dimension
ten or less, where plane-rotation sweeps are simple, robust, and more than
fast enough.  Eigenvalues come back in descending order together with the
matching orthogonal column basis.
"""

import numpy as np

MAX_DIMENSION = 10

_OFF_DIAG_FACTOR = 1e-13
_MAX_SWEEPS = 64


def jacobi_eigh(matrix, off_diag_factor=_OFF_DIAG_FACTOR):
    """Diagonalize a symmetric matrix by cyclic Jacobi rotations.

    Parameters
    ----------
    matrix : (n, n) array_like
        Symmetric real matrix, n <= 10.
    off_diag_factor : float
        Convergence threshold as a fraction of the largest input magnitude.

    Returns
    -------
    eigenvalues : (n,) ndarray, descending
    eigenvectors : (n, n) ndarray with orthonormal columns, so that
        ``matrix ~= eigenvectors @ diag(eigenvalues) @ eigenvectors.T``.
    """
    a = np.array(matrix, dtype=float)
    n = a.shape[0]
    v = np.eye(n)
    scale = float(np.max(np.abs(a))) if a.size else 0.0
    if scale == 0.0:
        return np.zeros(n), v
    threshold = off_diag_factor * scale

    others = np.arange(n)
    for _ in range(_MAX_SWEEPS):
        off = _max_off_diagonal(a)
        if off <= threshold:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if apq == 0.0:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                t = 1.0 / (abs(theta) + np.sqrt(theta * theta + 1.0))
                if theta < 0.0:
                    t = -t
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c

                mask = (others != p) & (others != q)
                akp = a[mask, p].copy()
                akq = a[mask, q].copy()
                a[mask, p] = a[p, mask] = c * akp - s * akq
                a[mask, q] = a[q, mask] = s * akp + c * akq
                a[p, p] -= t * apq
                a[q, q] += t * apq
                a[p, q] = a[q, p] = 0.0

                vp = v[:, p].copy()
                vq = v[:, q].copy()
                v[:, p] = c * vp - s * vq
                v[:, q] = s * vp + c * vq
    else:
        raise ArithmeticError("Jacobi sweeps failed to converge")

    eigenvalues = np.diag(a).copy()
    order = np.argsort(-eigenvalues, kind="stable")
    return eigenvalues[order], v[:, order]


def _max_off_diagonal(a):
    n = a.shape[0]
    if n < 2:
        return 0.0
    strict = np.abs(a - np.diag(np.diag(a)))
    return float(strict.max())
