"""Empirical bi-Lipschitz constants on balls and the loss of global stability."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .construct import rng_for
from .core import Ensemble, as_signal, check_ensemble, measure, measure_sq
from .errors import DomainError


@dataclass(eq=False)
class LipschitzEstimate:
    """Sampled extremes of the four ratios bounding ``M`` and ``M^2`` on a ball.

    ``pairs`` maps each constant name to the ``(x, y)`` pair attaining it.
    """

    c1_hat: float
    C1_hat: float
    c2_hat: float
    C2_hat: float
    n: int
    radius: float
    seed: int
    pairs: dict
    ratios: dict | None = None


def sample_ball(n: int, d: int, radius: float, complex_field: bool, rng) -> np.ndarray:
    """Uniform samples in the radius-``radius`` ball of ``R^d`` or ``C^d`` (``R^{2d}``)."""
    D = 2 * d if complex_field else d
    g = rng.standard_normal((n, D))
    g /= np.linalg.norm(g, axis=1, keepdims=True)
    r = radius * rng.random(n) ** (1.0 / D)
    P = g * r[:, None]
    return P[:, :d] + 1j * P[:, d:] if complex_field else P


def lipschitz_ratios(E: Ensemble, X: np.ndarray, Y: np.ndarray) -> dict:
    """The four per-pair ratios for rows of ``X`` and ``Y``."""
    ZX = X @ E.rows.T + E.shifts
    ZY = Y @ E.rows.T + E.shifts
    dM = np.linalg.norm(np.abs(ZX) - np.abs(ZY), axis=1)
    dM2 = np.linalg.norm(np.abs(ZX) ** 2 - np.abs(ZY) ** 2, axis=1)
    dx = np.linalg.norm(X - Y, axis=1)
    w = 1 + np.linalg.norm(X, axis=1) + np.linalg.norm(Y, axis=1)
    return {
        "c1": dM * w / dx,
        "C1": dM / dx,
        "c2": dM2 / dx,
        "C2": dM2 / (w * dx),
    }


def estimate_lipschitz(
    E: Ensemble,
    radius: float,
    n: int,
    seed: int = 0,
    extra_pairs=(),
    keep_ratios: bool = False,
) -> LipschitzEstimate:
    """Sample ``n`` pairs uniformly in the ball and take min/max ratios.

    ``c1_hat = min ||M(x)-M(y)|| (1+||x||+||y||) / ||x-y||``,
    ``C1_hat = max ||M(x)-M(y)|| / ||x-y||``,
    ``c2_hat = min ||M^2(x)-M^2(y)|| / ||x-y||``,
    ``C2_hat = max ||M^2(x)-M^2(y)|| / ((1+||x||+||y||) ||x-y||)``.
    ``extra_pairs`` are evaluated after the samples (e.g. a known witness).
    Ties go to the lowest sample index.
    """
    check_ensemble(E)
    if not radius > 0:
        raise DomainError("radius must be positive")
    if n < 2:
        raise DomainError("need at least 2 pairs")
    rng = rng_for(seed)
    cplx = not E.is_real
    X = sample_ball(n, E.d, radius, cplx, rng)
    Y = sample_ball(n, E.d, radius, cplx, rng)
    if len(extra_pairs):
        ex = np.array([as_signal(E, p[0]) for p in extra_pairs])
        ey = np.array([as_signal(E, p[1]) for p in extra_pairs])
        X = np.vstack([X, ex])
        Y = np.vstack([Y, ey])
    keep = np.linalg.norm(X - Y, axis=1) > 0
    X, Y = X[keep], Y[keep]
    R = lipschitz_ratios(E, X, Y)
    picks = {"c1": np.argmin, "C1": np.argmax, "c2": np.argmin, "C2": np.argmax}
    vals, pairs = {}, {}
    for k, f in picks.items():
        i = int(f(R[k]))
        vals[k] = float(R[k][i])
        pairs[k] = (X[i].copy(), Y[i].copy())
    return LipschitzEstimate(
        vals["c1"], vals["C1"], vals["c2"], vals["C2"], int(len(X)), float(radius), seed, pairs,
        R if keep_ratios else None,
    )


def lipschitz_upper_bound(E: Ensemble) -> float:
    """``sum_j ||a_j||``, a global Lipschitz constant of ``M``."""
    return float(np.sum(np.linalg.norm(E.rows, axis=1)))


def anisotropy_ratio(E: Ensemble, x0, r: float) -> float:
    """``||M(r x0) - M(-r x0)|| / (2 r ||x0||)``; tends to 0 as ``r`` grows."""
    check_ensemble(E)
    x0 = as_signal(E, x0)
    nx = np.linalg.norm(x0)
    if nx == 0:
        raise DomainError("x0 must be nonzero")
    if not r > 0:
        raise DomainError("r must be positive")
    return float(np.linalg.norm(measure(E, r * x0) - measure(E, -r * x0)) / (2 * r * nx))


def squared_ratio(E: Ensemble, x, y) -> float:
    """``||M^2(x) - M^2(y)|| / ||x - y||`` for a single pair."""
    x, y = as_signal(E, x), as_signal(E, y)
    return float(np.linalg.norm(measure_sq(E, x) - measure_sq(E, y)) / np.linalg.norm(x - y))
