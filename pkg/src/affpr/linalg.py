"""Small dense linear algebra: numerical rank, null vectors, exact rational rank."""

from __future__ import annotations

from fractions import Fraction

import numpy as np
import scipy.linalg as sla

from .errors import DomainError

DEFAULT_RANK_TOL = 1e-10


def check_rank_tol(tol: float) -> float:
    tol = float(tol)
    if not tol > 0 or not np.isfinite(tol):
        raise DomainError(f"rank tolerance must be strictly positive, got {tol}")
    return tol


def rank_threshold(M: np.ndarray, tol: float = DEFAULT_RANK_TOL) -> float:
    """Absolute singular-value cutoff ``tol * sigma_max(M) * max(M.shape)``."""
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0.0
    smax = np.linalg.norm(M, 2)
    return check_rank_tol(tol) * smax * max(M.shape)


def numerical_rank(M: np.ndarray, thresh: float) -> int:
    """Number of singular values strictly above ``thresh``."""
    M = np.atleast_2d(M)
    if M.size == 0:
        return 0
    s = np.linalg.svd(M, compute_uv=False)
    return int(np.sum(s > thresh))


def null_vector(M: np.ndarray, n: int | None = None) -> np.ndarray:
    """Unit right-singular vector of the smallest singular value.

    For a matrix with fewer rows than columns this is an exact null vector.
    An empty matrix (no rows) returns the first standard basis vector of
    length ``n``.
    """
    M = np.atleast_2d(M)
    if n is None:
        n = M.shape[1]
    if M.shape[0] == 0 or not np.any(M):
        e = np.zeros(n, dtype=M.dtype if M.size else float)
        e[0] = 1
        return e
    _, _, vh = np.linalg.svd(M, full_matrices=True)
    return vh[-1].conj()


def select_independent_rows(A: np.ndarray, k: int) -> np.ndarray:
    """Indices of ``k`` rows chosen greedily by largest pivot.

    Column-pivoted QR of ``A^T``; the returned indices are sorted.
    """
    _, _, piv = sla.qr(np.atleast_2d(A).T, pivoting=True, mode="economic")
    return np.sort(piv[:k])


def _to_fraction(v) -> Fraction:
    return Fraction(float(v))


def rational_rank(M) -> int:
    """Exact rank over Q of a real matrix whose entries are taken as exact binary fractions."""
    rows = [[_to_fraction(v) for v in r] for r in np.atleast_2d(np.asarray(M, dtype=float))]
    if not rows or not rows[0]:
        return 0
    nrow, ncol = len(rows), len(rows[0])
    rank = 0
    for c in range(ncol):
        piv = next((r for r in range(rank, nrow) if rows[r][c] != 0), None)
        if piv is None:
            continue
        rows[rank], rows[piv] = rows[piv], rows[rank]
        p = rows[rank]
        for r in range(nrow):
            if r != rank and rows[r][c] != 0:
                f = rows[r][c] / p[c]
                rows[r] = [a - f * b for a, b in zip(rows[r], p)]
        rank += 1
        if rank == nrow:
            break
    return rank
