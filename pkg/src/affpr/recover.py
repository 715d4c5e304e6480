"""Recovering a signal from affine magnitude data.

The stacked families admit closed-form coordinatewise solutions.  General
ensembles go through a lifted spectral initializer followed by damped
Gauss-Newton on the squared-magnitude residual.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np

from .certify import certify_structured, jacobian
from .core import Ensemble, Field, as_signal, check_ensemble, from_real, lift, measure, measure_sq, to_real
from .errors import ConditioningError, DomainError

log = logging.getLogger(__name__)


@dataclass(eq=False)
class RecoveryResult:
    x_hat: np.ndarray
    residual: float
    iterations: int = 0
    converged: bool = False
    restarts_used: int = 0
    history: list = field(default_factory=list, repr=False)


@dataclass(frozen=True)
class GaussNewtonConfig:
    max_iter: int = 200
    restarts: int = 10
    damping: float = 1e-3
    rtol: float = 1e-9
    seed: int = 0

    def __post_init__(self):
        if self.max_iter < 1 or self.restarts < 0 or not self.damping > 0 or not self.rtol > 0:
            raise DomainError(f"invalid Gauss-Newton configuration {self}")

    def threshold(self, mags_sq) -> float:
        return self.rtol * max(1.0, float(np.linalg.norm(mags_sq)))


def _mags(E, mags) -> np.ndarray:
    mags = np.asarray(mags, dtype=float).ravel()
    if mags.shape != (E.m,):
        raise DomainError(f"need {E.m} magnitudes, got {mags.size}")
    if not np.all(np.isfinite(mags)):
        raise DomainError("non-finite magnitudes")
    if np.any(mags < 0):
        raise DomainError("negative magnitudes")
    return mags


def _residual(E, x, mags) -> float:
    return float(np.linalg.norm(measure_sq(E, x) - mags**2))


def _finish(E, x, mags, rtol=1e-9) -> RecoveryResult:
    res = _residual(E, x, mags)
    ok = bool(np.max(np.abs(measure(E, x) - mags), initial=0.0) <= rtol * (1 + np.max(mags, initial=0.0)))
    if not ok:
        log.info("magnitudes not reproduced (residual %.3e); returning least-squares solve", res)
    return RecoveryResult(x, res, 0, ok, 0)


def recover_coordinatewise_real(E: Ensemble, mags) -> RecoveryResult:
    """Closed form for rows ``(B; B)`` with distinct shifts per coordinate.

    With ``w_j = <a_j, x>`` and magnitudes ``m1, m2`` against shifts ``b1, b2``:
    ``w_j = (m1^2 - m2^2 + b2^2 - b1^2) / (2 (b1 - b2))``; then ``B x = w``.
    ``converged`` is False when the data are not reproduced to 1e-9 relative.
    """
    check_ensemble(E, Field.REAL)
    if not certify_structured(E).retrievable:
        raise DomainError("pattern mismatch: ensemble is not (B; B) with distinct shift pairs")
    d = E.d
    mags = _mags(E, mags)
    b = E.shifts.real.reshape(2, d)
    m2 = (mags**2).reshape(2, d)
    w = (m2[0] - m2[1] + b[1] ** 2 - b[0] ** 2) / (2 * (b[0] - b[1]))
    B = E.rows.real[:d]
    x = w if np.array_equal(B, np.eye(d)) else np.linalg.solve(B, w)
    return _finish(E, x, mags)


def _pick_differences(b3):
    """The two shift differences with the largest separation, ties by index order."""
    pairs = [(0, 1), (0, 2), (1, 2)]
    sep = [abs(b3[k] - b3[l]) for k, l in pairs]
    order = sorted(range(3), key=lambda i: (-sep[i], i))
    return [pairs[i] for i in order[:2]]


def recover_coordinatewise_complex(E: Ensemble, mags, min_margin: float = 1e-12) -> RecoveryResult:
    """Closed form for rows ``(B; B; B)`` with non-collinear shift triples.

    For each coordinate, differences of ``|w + b_k|^2 = |w|^2 + 2(Re w Re b_k
    + Im w Im b_k) + |b_k|^2`` give a 2x2 real system in ``(Re w, Im w)``
    whose determinant is the triangle's collinearity margin up to sign;
    ``B x = w`` then undoes the mixing.
    """
    check_ensemble(E, Field.COMPLEX)
    if not certify_structured(E).retrievable:
        raise DomainError("pattern mismatch: ensemble is not (B; B; B) with non-collinear triples")
    d = E.d
    mags = _mags(E, mags)
    b = E.shifts.reshape(3, d)
    m2 = (mags**2).reshape(3, d)
    w = np.empty(d, complex)
    for j in range(d):
        bj = b[:, j]
        M = np.empty((2, 2))
        rhs = np.empty(2)
        for r, (k, l) in enumerate(_pick_differences(bj)):
            db = bj[k] - bj[l]
            M[r] = 2 * db.real, 2 * db.imag
            rhs[r] = m2[k, j] - m2[l, j] - abs(bj[k]) ** 2 + abs(bj[l]) ** 2
        span = max(abs(bj[0] - bj[1]), abs(bj[0] - bj[2]), abs(bj[1] - bj[2]))
        if abs(np.linalg.det(M)) <= 4 * min_margin * span * span:
            raise ConditioningError(f"shift triple at coordinate {j} is too close to collinear")
        s = np.linalg.solve(M, rhs)
        w[j] = s[0] + 1j * s[1]
    B = E.rows[:d]
    x = w if np.array_equal(B, np.eye(d)) else np.linalg.solve(B, w)
    return _finish(E, x, mags)


def spectral_init(E: Ensemble, mags) -> tuple[np.ndarray, bool]:
    """Top eigenvector of ``sum_j m_j^2 conj(l_j) l_j^T / m`` over lifted rows ``l_j``.

    The eigenvector is rescaled so its last entry is 1 and its first ``d``
    entries are returned.  Returns ``(x0, fallback)``; ``fallback`` is True
    (and ``x0`` zero) when the last entry is below 1e-8 in modulus.
    """
    check_ensemble(E)
    mags = _mags(E, mags)
    L = lift(E)
    Y = (L.conj().T * mags**2) @ L / E.m
    if E.is_real:
        Y = Y.real
    Y = (Y + Y.conj().T) / 2
    _, vecs = np.linalg.eigh(Y)
    top = vecs[:, -1]
    zero = np.zeros(E.d, dtype=E.field.dtype)
    if not np.any(mags) or abs(top[-1]) < 1e-8:
        return zero, True
    x0 = top[:-1] / top[-1]
    return (x0.real if E.is_real else x0), False


def _gn_run(E, mags_sq, x0, cfg, thresh):
    d = E.d
    cplx = not E.is_real
    w = to_real(x0) if cplx else np.asarray(x0, float).copy()

    def sig(w):
        return from_real(w, d) if cplx else w

    def jac(w):
        J = jacobian(E, sig(w))
        return J if cplx else 2 * J.T

    r = measure_sq(E, sig(w)) - mags_sq
    res = float(np.linalg.norm(r))
    history = [res]
    lam = None
    it = 0
    for it in range(1, cfg.max_iter + 1):
        if res <= thresh:
            it -= 1
            break
        J = jac(w)
        JTJ = J.T @ J
        g = J.T @ r
        if lam is None:
            lam = cfg.damping * max(np.trace(JTJ), 1e-300)
        accepted = False
        while lam < 1e300:
            try:
                step = np.linalg.solve(JTJ + lam * np.eye(len(w)), -g)
            except np.linalg.LinAlgError:
                lam *= 10
                continue
            wn = w + step
            rn = measure_sq(E, sig(wn)) - mags_sq
            resn = float(np.linalg.norm(rn))
            if resn < res:
                w, r, res = wn, rn, resn
                lam /= 3
                accepted = True
                history.append(res)
                break
            lam *= 10
            if np.linalg.norm(step) <= 1e-15 * (1 + np.linalg.norm(w)):
                break
        if not accepted:
            break
    return sig(w), res, it, history


def recover_gauss_newton(E: Ensemble, mags, init=None, cfg: GaussNewtonConfig | None = None) -> RecoveryResult:
    """Damped Gauss-Newton (Levenberg-Marquardt) on ``M^2(x) - mags^2``.

    Damping starts at ``cfg.damping * trace(J^T J)``, is divided by 3 after an
    accepted step and multiplied by 10 after a rejected one.  When a run
    stalls above the threshold ``cfg.rtol * max(1, ||mags^2||)``, restarts
    begin at seeded Gaussian perturbations of the spectral initializer with
    growing spread.  The best run (lowest residual, then lowest restart
    index) is returned.
    """
    check_ensemble(E)
    cfg = cfg or GaussNewtonConfig()
    mags = _mags(E, mags)
    mags_sq = mags**2
    thresh = cfg.threshold(mags_sq)
    if init is None:
        x0 = spectral_init(E, mags)[0]
    else:
        x0 = as_signal(E, init)
    if not np.all(np.isfinite(x0)):
        raise DomainError("non-finite initial point")
    base = x0
    rng = np.random.default_rng(cfg.seed)
    best = None
    total = 0
    for k in range(cfg.restarts + 1):
        if k > 0:
            spread = 0.5 * k * (1 + np.linalg.norm(base)) / np.sqrt(E.d)
            x0 = base + spread * rng.standard_normal(E.d)
            if not E.is_real:
                x0 = x0 + 1j * spread * rng.standard_normal(E.d)
        x, res, its, hist = _gn_run(E, mags_sq, x0, cfg, thresh)
        total += its
        if best is None or res < best.residual:
            best = RecoveryResult(x, res, its, res <= thresh, k, hist)
        if res <= thresh:
            break
    best.iterations = total
    best.restarts_used = k
    return best


def recover(E: Ensemble, mags, cfg: GaussNewtonConfig | None = None) -> RecoveryResult:
    """Closed form for the stacked families, Gauss-Newton otherwise."""
    if certify_structured(E).retrievable:
        if E.is_real:
            return recover_coordinatewise_real(E, mags)
        return recover_coordinatewise_complex(E, mags)
    return recover_gauss_newton(E, mags, cfg=cfg)
