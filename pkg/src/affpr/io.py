"""JSON encoding of ensembles, signals and results.

Complex numbers are written as ``[re, im]``; real numbers as plain JSON
numbers.  Python's float repr is shortest round-trip, so ``dumps(loads(s))``
reproduces ``s`` for anything this module wrote.  Non-finite values are not
representable and are rejected on both sides.
"""

from __future__ import annotations

import json
import math
import os
import tempfile
from importlib import resources

import jsonschema
import numpy as np

from .certify import Certificate, Outcome, UVWitness, Verdict, WitnessPair
from .construct import PerturbationReport
from .core import Ensemble, Field
from .errors import FormatError
from .recover import RecoveryResult
from .sparse import SparseVerdict
from .stability import LipschitzEstimate

SCHEMAS = ("ensemble", "signal", "magnitudes", "verdict", "recovery", "perturbation", "lipschitz", "shift_pairs", "shift_triples", "error")


# --- numbers and arrays ------------------------------------------------------------


def _num(z, cplx: bool):
    if cplx:
        z = complex(z)
        return [float(z.real), float(z.imag)]
    if isinstance(z, complex) or np.iscomplexobj(z):
        if z.imag != 0:
            raise FormatError("complex value in a real payload")
        z = z.real
    return float(z)


def encode_array(a, cplx: bool):
    a = np.asarray(a)
    if a.ndim == 0:
        return _num(a.item(), cplx)
    return [encode_array(v, cplx) for v in a]


def _scalar(v, cplx: bool, where: str):
    if cplx and isinstance(v, list):
        if len(v) != 2 or not all(_is_number(t) for t in v):
            raise FormatError(f"{where}: complex entries must be [re, im]")
        return complex(v[0], v[1])
    if _is_number(v):
        return complex(v) if cplx else float(v)
    raise FormatError(f"{where}: expected a number{' or [re, im]' if cplx else ''}, got {type(v).__name__}")


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def decode_vector(obj, cplx: bool, where: str) -> np.ndarray:
    if not isinstance(obj, list):
        raise FormatError(f"{where}: expected a list")
    vals = [_scalar(v, cplx, f"{where}[{i}]") for i, v in enumerate(obj)]
    return np.array(vals, dtype=complex if cplx else float).reshape(len(vals))


def decode_matrix(obj, cplx: bool, where: str) -> np.ndarray:
    if not isinstance(obj, list):
        raise FormatError(f"{where}: expected a list of rows")
    rows = [decode_vector(r, cplx, f"{where}[{i}]") for i, r in enumerate(obj)]
    if len({r.size for r in rows}) > 1:
        raise FormatError(f"{where}: ragged rows")
    if not rows:
        return np.zeros((0, 0), dtype=complex if cplx else float)
    return np.vstack(rows)


def _require(obj, keys, what):
    if not isinstance(obj, dict):
        raise FormatError(f"{what}: expected a JSON object")
    missing = [k for k in keys if k not in obj]
    if missing:
        raise FormatError(f"{what}: missing key(s) {', '.join(missing)}")


def _field(obj, what) -> Field:
    try:
        return Field(obj["field"])
    except ValueError:
        raise FormatError(f"{what}: field must be 'real' or 'complex', got {obj['field']!r}") from None


def _plain(v):
    """Make stats JSON-safe: numpy scalars to Python, non-finite floats to None."""
    if isinstance(v, dict):
        return {str(k): _plain(x) for k, x in v.items()}
    if isinstance(v, (list, tuple)):
        return [_plain(x) for x in v]
    if isinstance(v, np.ndarray):
        return _plain(v.tolist())
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.floating, float)):
        v = float(v)
        return v if math.isfinite(v) else None
    if isinstance(v, np.bool_):
        return bool(v)
    if isinstance(v, complex):
        return [v.real, v.imag]
    return v


# --- ensembles and signals -----------------------------------------------------------


def ensemble_to_dict(E: Ensemble) -> dict:
    cplx = not E.is_real
    return {
        "field": E.field.value,
        "m": E.m,
        "d": E.d,
        "rows": encode_array(E.rows, cplx),
        "shifts": encode_array(E.shifts, cplx),
    }


def ensemble_from_dict(obj) -> Ensemble:
    """Parse the shared ensemble object; shape disagreements are format errors."""
    _require(obj, ("field", "rows", "shifts"), "ensemble")
    field = _field(obj, "ensemble")
    cplx = field is Field.COMPLEX
    rows = decode_matrix(obj["rows"], cplx, "rows")
    shifts = decode_vector(obj["shifts"], cplx, "shifts")
    m = rows.shape[0]
    d = rows.shape[1] if m else 0
    if "m" in obj and obj["m"] != m:
        raise FormatError(f"ensemble: m={obj['m']} but rows has {m} entries")
    if "d" in obj and obj["d"] != d:
        raise FormatError(f"ensemble: d={obj['d']} but rows have length {d}")
    if shifts.size != m:
        raise FormatError(f"ensemble: {m} rows but {shifts.size} shifts")
    return Ensemble(field, rows, shifts)


def signal_to_dict(x, field=None) -> dict:
    x = np.asarray(x)
    field = Field(field) if field is not None else (Field.COMPLEX if np.iscomplexobj(x) else Field.REAL)
    return {"field": field.value, "d": int(x.size), "x": encode_array(x, field is Field.COMPLEX)}


def signal_from_dict(obj) -> np.ndarray:
    _require(obj, ("field", "x"), "signal")
    field = _field(obj, "signal")
    x = decode_vector(obj["x"], field is Field.COMPLEX, "x")
    if "d" in obj and obj["d"] != x.size:
        raise FormatError(f"signal: d={obj['d']} but x has {x.size} entries")
    return x


def magnitudes_to_dict(mags) -> dict:
    mags = np.asarray(mags, dtype=float)
    return {"m": int(mags.size), "mags": encode_array(mags, False)}


def magnitudes_from_dict(obj) -> np.ndarray:
    if isinstance(obj, list):
        return decode_vector(obj, False, "mags")
    _require(obj, ("mags",), "magnitudes")
    mags = decode_vector(obj["mags"], False, "mags")
    if "m" in obj and obj["m"] != mags.size:
        raise FormatError(f"magnitudes: m={obj['m']} but {mags.size} values")
    return mags


def shift_pairs_from_dict(obj) -> np.ndarray:
    _require(obj, ("pairs",), "shift pairs")
    P = decode_matrix(obj["pairs"], False, "pairs")
    if P.ndim != 2 or (P.size and P.shape[1] != 2):
        raise FormatError("pairs: every entry must be [b1, b2]")
    return P


def shift_triples_from_dict(obj) -> np.ndarray:
    _require(obj, ("triples",), "shift triples")
    T = decode_matrix(obj["triples"], True, "triples")
    if T.ndim != 2 or (T.size and T.shape[1] != 3):
        raise FormatError("triples: every entry must hold three complex shifts")
    return T


def shift_pairs_to_dict(pairs) -> dict:
    return {"pairs": encode_array(np.asarray(pairs, float).reshape(-1, 2), False)}


def shift_triples_to_dict(triples) -> dict:
    return {"triples": encode_array(np.asarray(triples, complex).reshape(-1, 3), True)}


# --- results ---------------------------------------------------------------------


def _pair_dict(x, y):
    cplx = np.iscomplexobj(x) or np.iscomplexobj(y)
    return {"x": encode_array(x, cplx), "y": encode_array(y, cplx)}


def _decode_sig(v, where):
    cplx = isinstance(v, list) and any(isinstance(t, list) for t in v)
    return decode_vector(v, cplx, where)


def verdict_to_dict(v: Verdict) -> dict:
    out = {
        "outcome": v.outcome.value,
        "certificate": v.certificate.value if v.certificate is not None else None,
        "witness": None,
        "stats": _plain(v.stats),
    }
    if v.witness is not None:
        w = _pair_dict(v.witness.x, v.witness.y)
        if v.uv is not None:
            cplx = np.iscomplexobj(v.uv.u)
            w["u"] = encode_array(v.uv.u, cplx)
            w["v"] = encode_array(v.uv.v, cplx)
        out["witness"] = w
    if isinstance(v, SparseVerdict):
        out["support_pair"] = None if v.support_pair is None else [list(map(int, s)) for s in v.support_pair]
    return out


def verdict_from_dict(obj) -> Verdict:
    _require(obj, ("outcome", "certificate", "witness", "stats"), "verdict")
    try:
        outcome = Outcome(obj["outcome"])
        cert = None if obj["certificate"] is None else Certificate(obj["certificate"])
    except ValueError as e:
        raise FormatError(f"verdict: {e}") from None
    witness = uv = None
    w = obj["witness"]
    if w is not None:
        _require(w, ("x", "y"), "witness")
        witness = WitnessPair(_decode_sig(w["x"], "witness.x"), _decode_sig(w["y"], "witness.y"))
        if "u" in w and "v" in w:
            uv = UVWitness(_decode_sig(w["u"], "witness.u"), _decode_sig(w["v"], "witness.v"))
    if "support_pair" in obj:
        sp = obj["support_pair"]
        return SparseVerdict(outcome, cert, witness, uv, dict(obj["stats"]), None if sp is None else tuple(tuple(s) for s in sp))
    return Verdict(outcome, cert, witness, uv, dict(obj["stats"]))


def recovery_to_dict(r: RecoveryResult) -> dict:
    cplx = np.iscomplexobj(r.x_hat)
    return {
        "x_hat": encode_array(r.x_hat, cplx),
        "residual": float(r.residual),
        "iterations": int(r.iterations),
        "converged": bool(r.converged),
        "restarts_used": int(r.restarts_used),
        "history": [float(h) for h in r.history],
    }


def recovery_from_dict(obj) -> RecoveryResult:
    keys = ("x_hat", "residual", "iterations", "converged", "restarts_used", "history")
    _require(obj, keys, "recovery")
    return RecoveryResult(
        _decode_sig(obj["x_hat"], "x_hat"),
        float(obj["residual"]),
        int(obj["iterations"]),
        bool(obj["converged"]),
        int(obj["restarts_used"]),
        [float(h) for h in obj["history"]],
    )


def perturbation_to_dict(p: PerturbationReport) -> dict:
    return {
        "original": ensemble_to_dict(p.original),
        "perturbed": ensemble_to_dict(p.perturbed),
        "delta": float(p.delta),
        "distance": float(p.distance),
        "witness": _pair_dict(p.witness.x, p.witness.y),
        "mismatch": p.witness.mismatch(p.perturbed),
    }


def perturbation_from_dict(obj) -> PerturbationReport:
    _require(obj, ("original", "perturbed", "delta", "distance", "witness"), "perturbation")
    w = obj["witness"]
    _require(w, ("x", "y"), "witness")
    return PerturbationReport(
        ensemble_from_dict(obj["original"]),
        ensemble_from_dict(obj["perturbed"]),
        float(obj["delta"]),
        float(obj["distance"]),
        WitnessPair(_decode_sig(w["x"], "witness.x"), _decode_sig(w["y"], "witness.y")),
    )


def lipschitz_to_dict(est: LipschitzEstimate) -> dict:
    return {
        "c1_hat": est.c1_hat,
        "C1_hat": est.C1_hat,
        "c2_hat": est.c2_hat,
        "C2_hat": est.C2_hat,
        "n": est.n,
        "radius": est.radius,
        "seed": _plain(est.seed),
        "pairs": {k: _pair_dict(x, y) for k, (x, y) in est.pairs.items()},
    }


def lipschitz_from_dict(obj) -> LipschitzEstimate:
    keys = ("c1_hat", "C1_hat", "c2_hat", "C2_hat", "n", "radius", "seed", "pairs")
    _require(obj, keys, "lipschitz")
    pairs = {k: (_decode_sig(p["x"], k + ".x"), _decode_sig(p["y"], k + ".y")) for k, p in obj["pairs"].items()}
    return LipschitzEstimate(
        float(obj["c1_hat"]), float(obj["C1_hat"]), float(obj["c2_hat"]), float(obj["C2_hat"]),
        int(obj["n"]), float(obj["radius"]), obj["seed"], pairs,
    )


def to_dict(obj) -> dict:
    """Dispatch on the result type."""
    for cls, fn in (
        (Ensemble, ensemble_to_dict),
        (Verdict, verdict_to_dict),
        (RecoveryResult, recovery_to_dict),
        (PerturbationReport, perturbation_to_dict),
        (LipschitzEstimate, lipschitz_to_dict),
    ):
        if isinstance(obj, cls):
            return fn(obj)
    raise TypeError(f"no JSON form for {type(obj).__name__}")


# --- text and files ----------------------------------------------------------------


def _reject_constant(name):
    raise FormatError(f"non-finite JSON constant {name}")


def dumps(obj, indent: int | None = 2) -> str:
    if not isinstance(obj, (dict, list)):
        obj = to_dict(obj)
    try:
        return json.dumps(obj, indent=indent, allow_nan=False)
    except ValueError as e:
        raise FormatError(str(e)) from None


def loads(text: str):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise FormatError(f"invalid JSON: {e}") from None


def read_json(path):
    try:
        with open(path, encoding="utf-8") as fh:
            return loads(fh.read())
    except OSError as e:
        raise FormatError(f"cannot read {path}: {e.strerror}") from None


def atomic_write(path, text: str) -> None:
    """Write via a temporary file in the target directory and ``os.replace``."""
    path = os.fspath(path)
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json(path, obj) -> None:
    atomic_write(path, dumps(obj) + "\n")


def load_schema(name: str) -> dict:
    if name not in SCHEMAS:
        raise KeyError(name)
    return json.loads(resources.files("affpr").joinpath("schemas", f"{name}.json").read_text(encoding="utf-8"))


def guess_kind(obj) -> str | None:
    """Name of the schema an object most plausibly targets."""
    if isinstance(obj, list):
        return "magnitudes"
    if not isinstance(obj, dict):
        return None
    probes = [
        ("rows", "ensemble"),
        ("outcome", "verdict"),
        ("x_hat", "recovery"),
        ("perturbed", "perturbation"),
        ("c2_hat", "lipschitz"),
        ("pairs", "shift_pairs"),
        ("triples", "shift_triples"),
        ("mags", "magnitudes"),
        ("x", "signal"),
    ]
    for key, kind in probes:
        if key in obj:
            return kind
    return None


def schema_errors(obj, kind: str) -> list[str]:
    """Messages from validating ``obj`` against the shipped schema ``kind``."""
    validator = jsonschema.Draft202012Validator(load_schema(kind))
    return [
        f"{'/'.join(map(str, e.absolute_path)) or '<root>'}: {e.message}"
        for e in sorted(validator.iter_errors(obj), key=lambda e: list(map(str, e.absolute_path)))
    ]
