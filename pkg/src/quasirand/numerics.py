"""Dense symmetric eigendecomposition, matrix norms and seeded random streams.

Eigenvalues are always reported in decreasing absolute value, ties broken
by signed value (descending) and then by original position. Eigenvectors
carry a fixed sign: the entry of largest magnitude is made positive.
"""

from dataclasses import dataclass

import numpy as np

from ._validation import check_seed, check_symmetric

CUT_NORM_CAP = 24


class CutNormCapError(ValueError):
    pass


@dataclass(frozen=True)
class EigenSystem:
    """Eigenpairs ordered by decreasing ``|value|``; ``vectors[:, i]`` pairs with ``values[i]``."""

    values: np.ndarray
    vectors: np.ndarray

    def __len__(self):
        return self.values.shape[0]


def _order(values):
    n = values.shape[0]
    return np.lexsort((np.arange(n), -values, -np.abs(values)))


def _fix_signs(vectors):
    if vectors.size == 0:
        return vectors
    pivot = np.argmax(np.abs(vectors), axis=0)
    signs = np.sign(vectors[pivot, np.arange(vectors.shape[1])])
    signs[signs == 0] = 1.0
    return vectors * signs


def jacobi_eigh(a, tol=1e-12, max_sweeps=100):
    """Cyclic Jacobi eigensolver.

    Sweeps the strict upper triangle row by row, annihilating each
    off-diagonal entry with a plane rotation, until the off-diagonal
    Frobenius norm drops below ``tol * ||a||_F``. Returns the unsorted
    eigenvalues and eigenvectors.
    """
    a = np.array(a, dtype=np.float64)
    n = a.shape[0]
    v = np.eye(n)
    scale = np.linalg.norm(a)
    if n < 2 or scale == 0:
        return np.diag(a).copy(), v
    for _ in range(max_sweeps):
        off = np.sqrt(2.0 * np.sum(np.triu(a, 1) ** 2))
        if off <= tol * scale:
            break
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                if abs(apq) <= 1e-300:
                    continue
                theta = (a[q, q] - a[p, p]) / (2.0 * apq)
                if abs(theta) > 1e150:
                    t = 0.5 / theta
                else:
                    t = np.copysign(1.0, theta) / (abs(theta) + np.sqrt(theta * theta + 1.0))
                c = 1.0 / np.sqrt(t * t + 1.0)
                s = t * c
                col_p = a[:, p].copy()
                a[:, p] = c * col_p - s * a[:, q]
                a[:, q] = s * col_p + c * a[:, q]
                row_p = a[p, :].copy()
                a[p, :] = c * row_p - s * a[q, :]
                a[q, :] = s * row_p + c * a[q, :]
                vec_p = v[:, p].copy()
                v[:, p] = c * vec_p - s * v[:, q]
                v[:, q] = s * vec_p + c * v[:, q]
    else:
        raise RuntimeError("Jacobi iteration did not converge")
    return np.diag(a).copy(), v


def eigh(m, method="lapack"):
    """Full eigendecomposition of a symmetric matrix.

    Parameters
    ----------
    m : array-like of shape (n, n)
        Symmetric matrix (checked to 1e-12).
    method : {"lapack", "jacobi"}
        ``"lapack"`` calls the divide-and-conquer LAPACK driver through
        numpy; ``"jacobi"`` uses :func:`jacobi_eigh`, practical for small
        matrices and kept as an independent cross-check.

    Returns
    -------
    EigenSystem
    """
    m = check_symmetric(m)
    m = (m + m.T) / 2.0
    if method == "lapack":
        values, vectors = np.linalg.eigh(m)
    elif method == "jacobi":
        values, vectors = jacobi_eigh(m)
    else:
        raise ValueError(f"unknown method {method!r}")
    order = _order(values)
    values = values[order]
    vectors = _fix_signs(vectors[:, order])
    return EigenSystem(values, vectors)


def spectral_norm(m):
    m = check_symmetric(m)
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(np.linalg.eigvalsh(m))))


def frobenius_norm(m):
    return float(np.linalg.norm(np.asarray(m, dtype=np.float64)))


def cut_norm_exact(m, cap=CUT_NORM_CAP):
    """Exact matrix cut norm ``max_{X,Y} |sum_{i in X, j in Y} m_ij|``.

    The smaller side is enumerated in Gray-code order so each step adds or
    removes one row from the running column sums. For a fixed row set the
    best column set takes every column whose sum has the winning sign.

    Returns
    -------
    value : float
    rows, cols : list of int
        Witness subsets attaining ``value``.
    """
    m = np.asarray(m, dtype=np.float64)
    if m.ndim != 2:
        raise ValueError("cut norm needs a 2-d matrix")
    r, c = m.shape
    if r + c > cap:
        raise CutNormCapError(
            f"{r}+{c} dimensions exceed the enumeration cap {cap}; use cut_norm_bound")
    transposed = r > c
    if transposed:
        m = m.T
        r, c = c, r
    sums = np.zeros(c)
    in_x = np.zeros(r, dtype=bool)
    best, best_x, best_y = 0.0, np.zeros(r, dtype=bool), np.zeros(c, dtype=bool)
    for i in range(1, 1 << r):
        row = (i & -i).bit_length() - 1
        if in_x[row]:
            sums -= m[row]
        else:
            sums += m[row]
        in_x[row] = not in_x[row]
        pos_mask = sums > 0
        pos = sums[pos_mask].sum()
        neg = -sums[sums < 0].sum()
        if pos > best:
            best, best_x, best_y = pos, in_x.copy(), pos_mask
        if neg > best:
            best, best_x, best_y = neg, in_x.copy(), sums < 0
    rows = np.flatnonzero(best_x).tolist()
    cols = np.flatnonzero(best_y).tolist()
    if transposed:
        rows, cols = cols, rows
    if best > 0:
        m_orig = m.T if transposed else m
        best = float(abs(m_orig[np.ix_(rows, cols)].sum()))
    return float(best), rows, cols


def graphon_cut_norm_bound(m):
    """Upper bound ``||E||/n`` on the cut norm of the step graphon of ``E``.

    Follows ``||W_E||_cut <= ||E||_cut / n^2 <= ||E|| / n``.
    """
    m = check_symmetric(m)
    n = m.shape[0]
    if n == 0:
        return 0.0
    return spectral_norm(m) / n


def seeded_rng(seed):
    """Deterministic random stream for ``seed``.

    The generator is numpy's PCG64 seeded through ``SeedSequence(seed)``;
    uniform floats come from ``Generator.random`` (53-bit doubles in [0, 1)).
    """
    return np.random.Generator(np.random.PCG64(check_seed(seed)))
