import numpy as np
import pytest

from affpr.certify import certify_real_exact
from affpr.construct import build_real_minimal, perturb_real, sample_generic
from affpr.core import Ensemble
from affpr.errors import DomainError
from affpr.stability import (
    anisotropy_ratio,
    estimate_lipschitz,
    lipschitz_ratios,
    lipschitz_upper_bound,
    sample_ball,
)

# first computed value, frozen (SAMPLER_VERSION 1, seed 0)
GOLDEN_C2 = 1.4142246154733578


def _fixtures():
    out = [build_real_minimal(2, [(1, 0), (2, 3)]), build_real_minimal(3, [(1, -1), (0.5, 2), (-2, 0)])]
    out += [sample_generic("real", m, d, seed) for seed, (m, d) in enumerate([(4, 2), (6, 3), (5, 2), (8, 3)])]
    out += [sample_generic("complex", 4 * d, d, 10 + d) for d in (1, 2)]
    return out


def test_golden_c2():
    E = build_real_minimal(2, [(1, 0), (2, 3)])
    est = estimate_lipschitz(E, 5, 100_000, seed=0)
    assert est.c2_hat > 0
    assert est.c2_hat == GOLDEN_C2


@pytest.mark.parametrize("E", _fixtures(), ids=lambda E: repr(E))
def test_estimate_invariants(E):
    R = 5.0
    est = estimate_lipschitz(E, R, 5000, seed=3)
    vals = [est.c1_hat, est.C1_hat, est.c2_hat, est.C2_hat]
    assert all(np.isfinite(v) and v >= 0 for v in vals)
    # the two lower/upper sides carry different weights; inside the ball 1+|x|+|y| <= 1+2R
    assert est.c1_hat <= (1 + 2 * R) * est.C1_hat
    assert est.C1_hat <= lipschitz_upper_bound(E)
    for key, value in zip(("c1", "C1", "c2", "C2"), vals):
        x, y = est.pairs[key]
        assert np.linalg.norm(x) <= R + 1e-12 and np.linalg.norm(y) <= R + 1e-12
        r = lipschitz_ratios(E, x[None], y[None])[key][0]
        assert abs(r - value) <= 1e-12 * max(1.0, value)


def test_reproducible():
    E = sample_generic("complex", 8, 2, 0)
    a = estimate_lipschitz(E, 2.0, 2000, seed=9)
    b = estimate_lipschitz(E, 2.0, 2000, seed=9)
    assert (a.c1_hat, a.C1_hat, a.c2_hat, a.C2_hat) == (b.c1_hat, b.C1_hat, b.c2_hat, b.C2_hat)
    for k in a.pairs:
        np.testing.assert_array_equal(a.pairs[k][0], b.pairs[k][0])


def test_injected_witness_zeroes_lower_constants():
    rep = perturb_real(build_real_minimal(2, [(1, 0), (2, 3)]), 0.5)
    w = rep.witness
    est = estimate_lipschitz(rep.perturbed, 5, 1000, seed=0, extra_pairs=[(w.x, w.y)])
    assert est.c1_hat <= 1e-12 and est.c2_hat <= 1e-12
    x, y = est.pairs["c2"]
    np.testing.assert_array_equal(x, w.x)


def test_c2_positive_as_n_doubles():
    for E in _fixtures():
        if not E.is_real or not certify_real_exact(E).retrievable:
            continue
        prev = np.inf
        for n in (10_000, 20_000, 40_000):
            c2 = estimate_lipschitz(E, 5, n, seed=1).c2_hat
            assert 0 < c2
            prev = min(prev, c2)
        assert prev > 0


def test_upper_bound_holds_on_random_ensembles():
    for seed in range(50):
        d = 1 + seed % 4
        E = sample_generic("complex" if seed % 2 else "real", 2 + seed % 9, d, seed)
        assert estimate_lipschitz(E, 3.0, 2000, seed=seed).C1_hat <= lipschitz_upper_bound(E)


def test_ball_sampling_is_uniform():
    rng = np.random.default_rng(0)
    for cplx, D in ((False, 3), (True, 6)):
        P = sample_ball(200_000, 3, 2.0, cplx, rng)
        r = np.linalg.norm(P, axis=1)
        assert r.max() <= 2.0
        # P(|x| <= R/2) = 2^-D for the uniform ball
        assert abs(np.mean(r <= 1.0) - 2.0**-D) < 5 * np.sqrt(2.0**-D / 200_000)


def test_estimate_rejects_bad_input():
    E = sample_generic("real", 4, 2, 0)
    with pytest.raises(DomainError):
        estimate_lipschitz(E, 0, 10)
    with pytest.raises(DomainError):
        estimate_lipschitz(E, 1, 1)
    with pytest.raises(DomainError):
        estimate_lipschitz(Ensemble("real", [[np.inf, 0]], [0]), 1, 10)


def test_anisotropy_examples():
    E = Ensemble("real", [[1], [1]], [0, 1])
    assert anisotropy_ratio(E, [1], 10) == pytest.approx(0.1, rel=1e-15)
    assert anisotropy_ratio(E, [1], 1000) == pytest.approx(0.001, rel=1e-15)
    E0 = Ensemble("real", sample_generic("real", 5, 3, 0).rows, np.zeros(5))
    assert anisotropy_ratio(E0, [1, 2, 3], 7.5) == 0
    with pytest.raises(DomainError, match="nonzero"):
        anisotropy_ratio(E, [0], 1)
    with pytest.raises(DomainError):
        anisotropy_ratio(E, [1], -1)


def test_anisotropy_decays_on_retrievable_real():
    rng = np.random.default_rng(0)
    checked = 0
    seed = 0
    while checked < 100:
        d = 1 + seed % 3
        E = sample_generic("real", 2 * d + 1, d, seed)
        seed += 1
        if not certify_real_exact(E).retrievable:
            continue
        x0 = rng.standard_normal(d)
        assert anisotropy_ratio(E, x0, 1e6) < 1e-4 * anisotropy_ratio(E, x0, 1)
        checked += 1


def test_anisotropy_eventually_small():
    for E in _fixtures():
        x0 = np.ones(E.d)
        ratios = [anisotropy_ratio(E, x0, 2.0**k) for k in range(40)]
        assert min(ratios[-5:]) < 1e-6
