"""Property-based checks of the invariants shared across modules."""

import numpy as np
from hypothesis import assume, given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays

from affpr.certify import certify_real_exact, verify_witness, violates_condition_c
from affpr.construct import build_complex_minimal, build_real_minimal
from affpr.core import Ensemble, measure
from affpr.recover import recover_coordinatewise_complex, recover_coordinatewise_real
from affpr.sparse import certify_sparse_real_exact

small_ints = st.integers(-3, 3).map(float)


@st.composite
def integer_ensembles(draw, max_m=6, max_d=3):
    d = draw(st.integers(1, max_d))
    m = draw(st.integers(1, max_m))
    rows = draw(arrays(float, (m, d), elements=small_ints))
    shifts = draw(arrays(float, (m,), elements=small_ints))
    return Ensemble("real", rows, shifts)


@settings(max_examples=300, deadline=None)
@given(E=integer_ensembles())
def test_real_verdicts_sound_and_exact_mode_agrees(E):
    v = certify_real_exact(E)
    if v.not_retrievable:
        assert verify_witness(E, v.witness.x, v.witness.y)
        assert np.max(np.abs(violates_condition_c(E, v.uv.u, v.uv.v))) <= 1e-9 * E.scale()
    assert certify_real_exact(E, exact=True).outcome is v.outcome


@settings(max_examples=150, deadline=None)
@given(E=integer_ensembles(max_m=5, max_d=3), extra=arrays(float, (4,), elements=small_ints))
def test_adding_a_row_never_breaks_retrievability(E, extra):
    assume(certify_real_exact(E).retrievable)
    row = extra[: E.d]
    assert certify_real_exact(E.append(row, extra[3])).retrievable


@settings(max_examples=200, deadline=None)
@given(
    pairs=arrays(float, (3, 2), elements=st.floats(-5, 5)),
    x=arrays(float, (3,), elements=st.floats(-100, 100)),
)
def test_real_closed_form_inverts_measurement(pairs, x):
    assume(np.all(np.abs(pairs[:, 0] - pairs[:, 1]) > 1e-2))
    E = build_real_minimal(3, pairs)
    xh = recover_coordinatewise_real(E, measure(E, x)).x_hat
    scale = (1 + np.abs(x).max() + np.abs(pairs).max()) ** 2 / np.abs(pairs[:, 0] - pairs[:, 1]).min()
    assert np.max(np.abs(xh - x)) <= 1e-12 * scale


@settings(max_examples=200, deadline=None)
@given(
    re=arrays(float, (2, 3), elements=st.floats(-3, 3)),
    im=arrays(float, (2, 3), elements=st.floats(-3, 3)),
    xr=arrays(float, (2,), elements=st.floats(-10, 10)),
    xi=arrays(float, (2,), elements=st.floats(-10, 10)),
)
def test_complex_closed_form_inverts_measurement(re, im, xr, xi):
    triples = re + 1j * im
    tri_area = [abs(((t[1] - t[0]).conjugate() * (t[2] - t[0])).imag) for t in triples]
    assume(min(tri_area) > 1e-1)
    E = build_complex_minimal(np.eye(2), triples)
    x = xr + 1j * xi
    xh = recover_coordinatewise_complex(E, measure(E, x)).x_hat
    scale = (1 + np.abs(x).max() + np.abs(triples).max()) ** 2 / min(tri_area)
    assert np.max(np.abs(xh - x)) <= 1e-12 * scale


@settings(max_examples=100, deadline=None)
@given(E=integer_ensembles(max_m=4, max_d=4), s=st.integers(1, 3))
def test_sparse_witnesses_respect_supports(E, s):
    assume(s <= E.d - 1)
    v = certify_sparse_real_exact(E, s)
    if v.not_retrievable:
        I, J = v.support_pair
        assert verify_witness(E, v.witness.x, v.witness.y)
        assert np.all(np.delete(v.witness.x, list(I)) == 0)
        assert np.all(np.delete(v.witness.y, list(J)) == 0)
        assert len(I) <= s and len(J) <= s
