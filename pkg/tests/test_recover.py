import numpy as np
import pytest

from affpr.certify import certify_real_exact
from affpr.construct import build_complex_minimal, build_real_minimal, random_nonsingular, sample_generic
from affpr.core import measure, measure_sq
from affpr.errors import ConditioningError, DomainError
from affpr.recover import (
    GaussNewtonConfig,
    _pick_differences,
    recover,
    recover_coordinatewise_complex,
    recover_coordinatewise_real,
    recover_gauss_newton,
    spectral_init,
)

SQ2, SQ5 = np.sqrt(2), np.sqrt(5)


def test_coordinatewise_real_examples():
    E = build_real_minimal(1, [(1, 0)])
    r = recover_coordinatewise_real(E, [4, 3])
    assert r.x_hat.tolist() == [3] and r.converged
    E = build_real_minimal(3, [(1, -2), (0.5, 3), (-1, 4)])
    r = recover_coordinatewise_real(E, np.abs(E.shifts))
    np.testing.assert_allclose(r.x_hat, 0, atol=1e-15)


def test_coordinatewise_real_round_trip():
    rng = np.random.default_rng(0)
    for t in range(1000):
        d = 1 + t % 8
        E = build_real_minimal(d, rng.standard_normal((d, 2)) * 3)
        x = rng.standard_normal(d) * rng.choice([0.1, 1, 10])
        xh = recover_coordinatewise_real(E, measure(E, x)).x_hat
        assert np.max(np.abs(xh - x)) <= 1e-10 * (1 + np.max(np.abs(x))) * _pair_cond(E)


def _pair_cond(E):
    # the closed form divides by b1 - b2 and subtracts squares of size ~ (|x| + |b|)^2
    d = E.d
    b = E.shifts.reshape(2, d)
    return float(np.max((1 + np.abs(b).max(axis=0)) / np.abs(b[0] - b[1])))


def test_coordinatewise_real_inconsistent():
    E = build_real_minimal(1, [(1, 0)])
    r = recover_coordinatewise_real(E, [0.1, 5])
    assert not r.converged and r.residual > 0
    with pytest.raises(DomainError, match="pattern"):
        recover_coordinatewise_real(sample_generic("real", 4, 2, 0), np.ones(4))
    with pytest.raises(DomainError):
        recover_coordinatewise_real(E, [1, -1])


def test_coordinatewise_complex_examples():
    E = build_complex_minimal([[1]], [(0, 1, 1j)])
    r = recover_coordinatewise_complex(E, [SQ2, SQ5, SQ5])
    assert r.x_hat[0] == pytest.approx(1 + 1j, abs=1e-14)
    r = recover_coordinatewise_complex(E, np.abs(E.shifts))
    assert abs(r.x_hat[0]) < 1e-15


def test_coordinatewise_complex_round_trip_mixed_b():
    rng = np.random.default_rng(1)
    B = random_nonsingular(4, 9)
    E = build_complex_minimal(B, rng.standard_normal((4, 3)) + 1j * rng.standard_normal((4, 3)))
    c = np.linalg.cond(B)
    for _ in range(500):
        x = rng.standard_normal(4) + 1j * rng.standard_normal(4)
        xh = recover_coordinatewise_complex(E, measure(E, x)).x_hat
        assert np.linalg.norm(xh - x) <= 1e-8 * (1 + np.linalg.norm(x)) * c


def test_coordinatewise_complex_conditioning():
    E = build_complex_minimal([[1]], [(0, 1, 2 + 1e-6j)])
    with pytest.raises(ConditioningError):
        recover_coordinatewise_complex(E, [1, 1, 1], min_margin=1e-3)
    # triples closer to collinear than the default margin are not recognized at all
    E = build_complex_minimal([[1]], [(0, 1, 2 + 1e-14j)])
    with pytest.raises(DomainError, match="pattern"):
        recover_coordinatewise_complex(E, [1, 1, 1])


def test_pick_differences_largest_separation():
    assert _pick_differences([0, 1, 1j]) == [(1, 2), (0, 1)]
    assert _pick_differences([0, 10, 1j]) == [(1, 2), (0, 1)]
    assert _pick_differences([0, 2, 1 + 1j]) == [(0, 1), (0, 2)]


def test_closed_forms_scale_with_squared_differences():
    # shifting every magnitude^2 of one coordinate by the same constant leaves the solve unchanged
    E = build_real_minimal(2, [(1, 0), (2, -1)])
    rng = np.random.default_rng(4)
    for _ in range(20):
        x = rng.standard_normal(2)
        m2 = measure_sq(E, x)
        c = rng.uniform(0, 5, size=2)
        shifted = np.sqrt(m2 + np.concatenate([c, c]))
        a = recover_coordinatewise_real(E, measure(E, x)).x_hat
        b = recover_coordinatewise_real(E, shifted).x_hat
        np.testing.assert_allclose(a, b, rtol=1e-10, atol=1e-12)


def test_spectral_init_fallback():
    E = sample_generic("complex", 8, 2, 0)
    x0, fb = spectral_init(E, np.zeros(8))
    assert fb and not np.any(x0)


@pytest.mark.parametrize("field,factor", [("real", 32), ("complex", 64)])
def test_spectral_init_quality(field, factor):
    # frozen calibration: relative error below 1 in at least 90% of 200 trials
    rng = np.random.default_rng(0)
    d = 3
    good = 0
    for t in range(200):
        E = sample_generic(field, factor * d, d, 1000 + t)
        x = rng.standard_normal(d) + (1j * rng.standard_normal(d) if field == "complex" else 0)
        x0, _ = spectral_init(E, measure(E, x))
        good += np.linalg.norm(x0 - x) / (1 + np.linalg.norm(x)) < 1
    assert good >= 180


def test_structured_zero_signal_pipeline():
    E = build_complex_minimal(np.eye(3), [(0, 1, 1j)] * 3)
    r = recover_gauss_newton(E, measure(E, np.zeros(3)))
    assert r.converged and np.linalg.norm(r.x_hat) < 1e-6


def test_gauss_newton_from_truth():
    for field in ("real", "complex"):
        E = sample_generic(field, 12, 3, 2)
        x = np.array([1.0, -2.0, 0.5])
        r = recover_gauss_newton(E, measure(E, x), init=x)
        assert r.converged and r.iterations <= 1
        assert r.residual <= GaussNewtonConfig().threshold(measure_sq(E, x))


def test_gauss_newton_matches_closed_form():
    rng = np.random.default_rng(3)
    E = build_real_minimal(3, [(1, -1), (2, 0.5), (-1, 1)])
    for _ in range(20):
        x = rng.standard_normal(3) * 2
        mags = measure(E, x)
        r = recover_gauss_newton(E, mags)
        assert r.converged
        np.testing.assert_allclose(r.x_hat, recover_coordinatewise_real(E, mags).x_hat, atol=1e-8)


def test_gauss_newton_complex_generic():
    rng = np.random.default_rng(5)
    ok = total = 0
    for d in range(1, 7):
        for t in range(34):
            E = sample_generic("complex", 4 * d, d, 100 * d + t)
            x = rng.standard_normal(d) + 1j * rng.standard_normal(d)
            r = recover_gauss_newton(E, measure(E, x))
            ok += np.linalg.norm(r.x_hat - x) <= 1e-6 * (1 + np.linalg.norm(x))
            total += 1
    assert ok >= 0.95 * total


def test_gauss_newton_history_monotone():
    rng = np.random.default_rng(6)
    for seed in range(30):
        E = sample_generic("complex", 10, 3, seed)
        r = recover_gauss_newton(E, measure(E, rng.standard_normal(3) + 1j * rng.standard_normal(3)))
        h = np.array(r.history)
        assert np.all(np.diff(h) <= 0)
        assert r.residual == h[-1]


def test_gauss_newton_rejects_bad_input():
    E = sample_generic("real", 6, 2, 0)
    with pytest.raises(DomainError):
        recover_gauss_newton(E, [np.nan] * 6)
    with pytest.raises(DomainError):
        recover_gauss_newton(E, np.ones(6), init=[np.inf, 0])
    with pytest.raises(DomainError):
        GaussNewtonConfig(restarts=-1)


def test_round_trip_on_certified_real():
    rng = np.random.default_rng(8)
    checked = 0
    for seed in range(60):
        d = 1 + seed % 3
        E = sample_generic("real", 2 * d + seed % 2, d, seed)
        if not certify_real_exact(E).retrievable:
            continue
        for _ in range(5):
            x = rng.standard_normal(d)
            mags = measure(E, x)
            r = recover(E, mags, cfg=GaussNewtonConfig(restarts=30))
            assert np.max(np.abs(measure(E, r.x_hat) - mags)) <= 1e-8 * (1 + np.max(mags))
            np.testing.assert_allclose(r.x_hat, x, atol=1e-6 * (1 + np.linalg.norm(x)))
            checked += 1
    assert checked >= 200


def test_recover_dispatch():
    E = build_complex_minimal(np.eye(2), [(0, 1, 1j)] * 2)
    x = np.array([1 - 1j, 2j])
    r = recover(E, measure(E, x))
    np.testing.assert_allclose(r.x_hat, x, atol=1e-12)
    assert r.iterations == 0


def test_deterministic():
    E = sample_generic("complex", 8, 2, 0)
    mags = measure(E, np.array([1 + 1j, -2]))
    a = recover_gauss_newton(E, mags, cfg=GaussNewtonConfig(seed=4))
    b = recover_gauss_newton(E, mags, cfg=GaussNewtonConfig(seed=4))
    np.testing.assert_array_equal(a.x_hat, b.x_hat)
    assert a.history == b.history
