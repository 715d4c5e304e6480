import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from affpr import io
from affpr.certify import certify_real_exact, falsify_complex
from affpr.construct import build_complex_minimal, build_real_minimal, perturb_complex, perturb_real, sample_generic
from affpr.core import Ensemble, measure
from affpr.errors import FormatError
from affpr.recover import recover_gauss_newton
from affpr.sparse import certify_sparse_real_exact
from affpr.stability import estimate_lipschitz


def _results():
    Er = sample_generic("real", 3, 2, 0)
    Ec = sample_generic("complex", 5, 2, 0)
    x = np.array([1 + 2j, -0.5j])
    return [
        ("ensemble", Er),
        ("ensemble", Ec),
        ("verdict", certify_real_exact(Er)),
        ("verdict", certify_real_exact(build_real_minimal(2, [(1, 0), (2, 3)]))),
        ("verdict", falsify_complex(Ec)),
        ("verdict", falsify_complex(build_complex_minimal(np.eye(2), [(0, 1, 1j)] * 2), restarts=2)),
        ("verdict", certify_sparse_real_exact(sample_generic("real", 2, 3, 0), 1)),
        ("recovery", recover_gauss_newton(sample_generic("complex", 8, 2, 1), measure(sample_generic("complex", 8, 2, 1), x))),
        ("perturbation", perturb_real(build_real_minimal(2, [(1, 0), (2, 3)]), 0.1)),
        ("perturbation", perturb_complex(build_complex_minimal(np.eye(2), [(1j, 0, 1)] * 2), 0.01)),
        ("lipschitz", estimate_lipschitz(Er, 2.0, 100)),
    ]


READERS = {
    "ensemble": io.ensemble_from_dict,
    "verdict": io.verdict_from_dict,
    "recovery": io.recovery_from_dict,
    "perturbation": io.perturbation_from_dict,
    "lipschitz": io.lipschitz_from_dict,
}


@pytest.mark.parametrize("kind,obj", _results(), ids=lambda v: v if isinstance(v, str) else type(v).__name__)
def test_round_trip_and_schema(kind, obj):
    text = io.dumps(obj)
    payload = io.loads(text)
    assert io.schema_errors(payload, kind) == []
    assert io.guess_kind(payload) == kind
    again = io.dumps(READERS[kind](payload))
    assert again == text


def test_ensemble_format():
    E = Ensemble("complex", [[1, 2j]], [0.5 - 1j])
    d = io.ensemble_to_dict(E)
    assert d == {"field": "complex", "m": 1, "d": 2, "rows": [[[1.0, 0.0], [0.0, 2.0]]], "shifts": [[0.5, -1.0]]}
    assert io.ensemble_from_dict(d) == E


@settings(max_examples=200, deadline=None)
@given(
    vals=st.lists(st.floats(allow_nan=False, allow_infinity=False, width=64), min_size=2, max_size=12),
    cplx=st.booleans(),
)
def test_float_round_trip_is_exact(vals, cplx):
    n = len(vals) // 2
    rows = np.array(vals[:n]).reshape(n, 1)
    shifts = np.array(vals[n : 2 * n])
    if cplx:
        rows = rows + 1j * rows[::-1]
    E = Ensemble("complex" if cplx else "real", rows, shifts)
    back = io.ensemble_from_dict(io.loads(io.dumps(E)))
    assert back == E


@pytest.mark.parametrize(
    "payload",
    [
        '{"field": "real", "rows": [[1, 2]], "shifts": [1, 2]}',
        '{"field": "real", "rows": [[1, 2], [3]], "shifts": [1, 2]}',
        '{"field": "quaternion", "rows": [[1]], "shifts": [1]}',
        '{"field": "real", "rows": [[1]]}',
        '{"field": "real", "m": 2, "rows": [[1]], "shifts": [1]}',
        '{"field": "complex", "rows": [[[1, 2, 3]]], "shifts": [0]}',
        '{"field": "real", "rows": [[NaN]], "shifts": [0]}',
        '{"field": "real", "rows": [["1"]], "shifts": [0]}',
        "not json",
    ],
)
def test_malformed_ensembles(payload):
    with pytest.raises(FormatError):
        io.ensemble_from_dict(io.loads(payload))


def test_shift_specs():
    P = io.shift_pairs_from_dict({"pairs": [[1, 0], [2, 3]]})
    assert P.tolist() == [[1, 0], [2, 3]]
    T = io.shift_triples_from_dict({"triples": [[[0, 0], [1, 0], [0, 1]]]})
    assert T.tolist() == [[0, 1, 1j]]
    assert io.schema_errors(io.shift_triples_to_dict(T), "shift_triples") == []
    assert io.schema_errors(io.shift_pairs_to_dict(P), "shift_pairs") == []
    with pytest.raises(FormatError):
        io.shift_pairs_from_dict({"pairs": [[1, 0, 2]]})


def test_signals_and_magnitudes():
    x = np.array([1 + 1j, 2])
    d = io.signal_to_dict(x)
    assert io.schema_errors(d, "signal") == []
    np.testing.assert_array_equal(io.signal_from_dict(d), x)
    m = io.magnitudes_to_dict([1.0, 2.5])
    assert io.schema_errors(m, "magnitudes") == []
    assert io.magnitudes_from_dict(m).tolist() == [1.0, 2.5]
    assert io.magnitudes_from_dict([3, 4]).tolist() == [3, 4]


def test_atomic_write(tmp_path):
    p = tmp_path / "a.json"
    io.write_json(p, {"k": 1})
    assert json.loads(p.read_text()) == {"k": 1}
    assert [f.name for f in tmp_path.iterdir()] == ["a.json"]


def test_all_schemas_load():
    for name in io.SCHEMAS:
        assert io.load_schema(name)["title"] == name
