"""Ensembles with known properties and constructive non-injectivity witnesses."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import linalg
from .certify import WitnessPair, _bilinear_rows, collinearity_margin, verify_witness, witness_from_uv
from .core import Ensemble, Field, check_ensemble, from_real
from .errors import DomainError, WitnessError

# Bumped whenever the sampling recipe changes; fixtures depend on it.
SAMPLER_VERSION = 1


@dataclass(frozen=True, eq=False)
class PerturbationReport:
    original: Ensemble
    perturbed: Ensemble
    delta: float
    distance: float
    witness: WitnessPair


def build_real_minimal(d: int, pairs) -> Ensemble:
    """Rows ``(I_d; I_d)`` with shifts ``(b_11..b_d1, b_12..b_d2)``; ``m = 2d``."""
    pairs = np.asarray(pairs, dtype=float).reshape(-1, 2)
    if pairs.shape[0] != d:
        raise DomainError(f"need {d} shift pairs, got {pairs.shape[0]}")
    for j, (b1, b2) in enumerate(pairs):
        if b1 == b2:
            raise DomainError(f"equal shift pair at coordinate {j}: ({b1}, {b2})")
    I = np.eye(d)
    return Ensemble(Field.REAL, np.vstack([I, I]), np.concatenate([pairs[:, 0], pairs[:, 1]]))


def build_complex_minimal(B, triples, tol: float = linalg.DEFAULT_RANK_TOL) -> Ensemble:
    """Three stacked copies of ``B^T`` with shifts grouped ``(b_.1, b_.2, b_.3)``; ``m = 3d``.

    The stored functionals are the rows of ``B^T`` (the ensemble matrix is
    ``(B, B, B)^T``).  Every shift triple must be non-collinear and ``B``
    nonsingular.
    """
    B = np.atleast_2d(np.asarray(B, dtype=complex))
    d = B.shape[0]
    if B.shape != (d, d):
        raise DomainError(f"B must be square, got shape {B.shape}")
    if linalg.numerical_rank(B, linalg.rank_threshold(B, tol)) < d:
        raise DomainError("singular B")
    triples = np.asarray(triples, dtype=complex).reshape(-1, 3)
    if triples.shape[0] != d:
        raise DomainError(f"need {d} shift triples, got {triples.shape[0]}")
    for j, (b1, b2, b3) in enumerate(triples):
        margin = collinearity_margin(b1, b2, b3)
        if margin <= 0:
            raise DomainError(f"collinear triple at coordinate {j} (margin {margin})")
    return Ensemble(Field.COMPLEX, np.vstack([B.T] * 3), triples.T.ravel())


def rng_for(seed) -> np.random.Generator:
    """The package's generator: PCG64 seeded through ``SeedSequence``."""
    if isinstance(seed, np.random.SeedSequence):
        return np.random.Generator(np.random.PCG64(seed))
    return np.random.Generator(np.random.PCG64(np.random.SeedSequence(seed)))


def sample_generic(field, m: int, d: int, seed) -> Ensemble:
    """Gaussian ensemble, one independent child stream per measurement row.

    Row ``j`` draws from ``SeedSequence(seed).spawn(m)[j]``: ``d`` entries then
    the shift for real ensembles; real parts then imaginary parts for complex
    ones.  Adding rows therefore leaves earlier rows unchanged.
    """
    field = Field(field)
    if m < 1 or d < 1:
        raise DomainError("need m >= 1 and d >= 1")
    ss = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    rows = []
    for child in ss.spawn(m):
        g = rng_for(child)
        if field is Field.REAL:
            rows.append(g.standard_normal(d + 1))
        else:
            z = g.standard_normal((2, d + 1))
            rows.append(z[0] + 1j * z[1])
    L = np.array(rows)
    return Ensemble(field, L[:, :d], L[:, d])


def _require(cond, msg):
    if not cond:
        raise DomainError(msg)


def perturb_real(E: Ensemble, delta: float) -> PerturbationReport:
    """Move functional entry (1, 2) by ``b_11 * delta``; the result is not injective.

    Witness: ``x = (b_11, -1/delta, 0, ...)`` and ``y = (-b_11, -1/delta, 0, ...)``.
    """
    check_ensemble(E, Field.REAL)
    d = E.d
    _require(d >= 2, "perturb_real needs d >= 2")
    _require(E.m == 2 * d and np.array_equal(E.rows.real, np.vstack([np.eye(d)] * 2)), "ensemble is not (I_d; I_d)")
    b = E.shifts.real
    _require(np.all(b[:d] != b[d:]), "shift pairs must be distinct")
    _require(b[d] == 0, "b_12 must be 0")
    _require(b[0] != 0, "b_11 must be nonzero")
    _require(delta > 0, "delta must be positive")
    rows = E.rows.real.copy()
    rows[0, 1] += b[0] * delta
    Ep = Ensemble(Field.REAL, rows, b)
    x = np.zeros(d)
    y = np.zeros(d)
    x[0], y[0] = b[0], -b[0]
    x[1] = y[1] = -1 / delta
    if not verify_witness(Ep, x, y):
        raise WitnessError("perturbation witness failed verification")
    dist = float(np.linalg.norm(rows - E.rows.real))
    return PerturbationReport(E, Ep, float(delta), dist, WitnessPair(x, y))


def perturb_complex(E: Ensemble, delta: float) -> PerturbationReport:
    """Move functional entry (1, 2) by ``i * delta`` on ``(I; I; I)`` with shifts ``(i.., 0.., 1..)``.

    Witness: ``x = (i, -1/delta, 0, ...)`` and ``y = (-i, -1/delta, 0, ...)``.
    """
    check_ensemble(E, Field.COMPLEX)
    d = E.d
    _require(d >= 2, "perturb_complex needs d >= 2")
    _require(E.m == 3 * d and np.array_equal(E.rows, np.vstack([np.eye(d)] * 3)), "ensemble is not (I_d; I_d; I_d)")
    pattern = np.concatenate([np.full(d, 1j), np.zeros(d), np.ones(d)])
    _require(np.array_equal(E.shifts, pattern), "shifts must be (i,...,i,0,...,0,1,...,1)")
    _require(delta > 0, "delta must be positive")
    rows = np.array(E.rows)
    rows[0, 1] += 1j * delta
    Ep = Ensemble(Field.COMPLEX, rows, E.shifts)
    x = np.zeros(d, complex)
    y = np.zeros(d, complex)
    x[0], y[0] = 1j, -1j
    x[1] = y[1] = -1 / delta
    if not verify_witness(Ep, x, y):
        raise WitnessError("perturbation witness failed verification")
    dist = float(np.linalg.norm(rows - E.rows))
    return PerturbationReport(E, Ep, float(delta), dist, WitnessPair(x, y))


def _nullspace_pair(E: Ensemble, tol) -> WitnessPair | None:
    A = E.rows
    if linalg.numerical_rank(A, linalg.rank_threshold(np.column_stack([A, E.shifts]), tol)) >= E.d:
        return None
    u = linalg.null_vector(A, E.d)
    u = u / np.linalg.norm(u)
    x = np.zeros(E.d, dtype=A.dtype)
    pair = WitnessPair(x, x + u)
    if not pair.verify(E):
        raise WitnessError("null-space witness failed verification")
    return pair


def witness_subminimal_real(E: Ensemble, tol: float = linalg.DEFAULT_RANK_TOL) -> WitnessPair:
    """Collision for a real ensemble with ``m <= 2d - 1``.

    If ``A`` is rank deficient, returns ``(0, u)`` with ``u`` in its null space.
    Otherwise picks ``d`` independent rows ``S0`` by pivoted QR, zeroes their
    affine forms with ``v`` and takes ``u`` orthogonal to the other rows.
    """
    check_ensemble(E, Field.REAL)
    if E.m >= 2 * E.d:
        raise DomainError(f"witness_subminimal_real needs m <= 2d-1, got m={E.m}, d={E.d}")
    pair = _nullspace_pair(E, tol)
    if pair is not None:
        return pair
    A, b = E.rows.real, E.shifts.real
    S0 = linalg.select_independent_rows(A, E.d)
    rest = np.setdiff1d(np.arange(E.m), S0)
    v = np.linalg.solve(A[S0], -b[S0])
    u = linalg.null_vector(A[rest], E.d)
    return witness_from_uv(E, u, v)[0]


def witness_subminimal_complex(E: Ensemble, tol: float = linalg.DEFAULT_RANK_TOL) -> WitnessPair:
    """Collision for a complex ensemble with ``m <= 3d - 1``.

    Zeroes ``d`` affine forms with ``v``; the remaining ``m - d < 2d`` real
    equations ``Re(conj(<a_j,u>)(<a_j,v> + b_j)) = 0`` in ``(Re u, Im u)``
    always have a nonzero solution.
    """
    check_ensemble(E, Field.COMPLEX)
    d = E.d
    if E.m >= 3 * d:
        raise DomainError(f"witness_subminimal_complex needs m <= 3d-1, got m={E.m}, d={d}")
    pair = _nullspace_pair(E, tol)
    if pair is not None:
        return pair
    T = linalg.select_independent_rows(E.rows, d)
    rest = np.setdiff1d(np.arange(E.m), T)
    v = np.linalg.solve(E.rows[T], -E.shifts[T])
    G = _bilinear_rows(E.rows[rest], E.rows[rest] @ v + E.shifts[rest])
    if G.shape[0] == 0:
        w = np.zeros(2 * d)
        w[0] = 1
    else:
        w = linalg.null_vector(G, 2 * d)
    u = from_real(w, d)
    return witness_from_uv(E, u, v)[0]


def shift_triples_margin(triples) -> np.ndarray:
    """Collinearity margin of every triple."""
    t = np.asarray(triples, dtype=complex).reshape(-1, 3)
    return np.array([collinearity_margin(*row) for row in t])


def random_nonsingular(d: int, seed, field=Field.COMPLEX, max_cond: float = 1e3) -> np.ndarray:
    """Gaussian ``d x d`` matrix redrawn until its condition number is below ``max_cond``."""
    g = rng_for(seed)
    for _ in range(1000):
        if Field(field) is Field.REAL:
            B = g.standard_normal((d, d))
        else:
            B = (g.standard_normal((d, d)) + 1j * g.standard_normal((d, d))) / math.sqrt(2)
        if np.linalg.cond(B) < max_cond:
            return B
    raise DomainError("could not draw a well-conditioned matrix")
