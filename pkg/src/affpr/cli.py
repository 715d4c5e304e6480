"""Command-line interface: ``affpr <subcommand> [options]``.

Exit codes: 0 success, 1 domain error (JSON description on stderr), 2 I/O,
format or usage error.
"""

from __future__ import annotations

import argparse
import csv
import io as _io
import json
import logging
import os
import sys

import numpy as np

from . import __version__, io
from .certify import (
    Outcome,
    Verdict,
    brute_force_collision_search,
    certify,
    certify_real_exact,
    falsify_complex,
)
from .construct import (
    build_complex_minimal,
    build_real_minimal,
    perturb_complex,
    perturb_real,
    random_nonsingular,
    sample_generic,
)
from .core import Ensemble, Field, check_ensemble, measure, validate_ensemble
from .errors import DomainError, FormatError
from .experiment import ExperimentSpec, Kind, run_and_write, summarize
from .recover import GaussNewtonConfig, recover, recover_gauss_newton
from .sparse import certify_sparse_real_exact, falsify_sparse_complex
from .stability import estimate_lipschitz

log = logging.getLogger("affpr")


class _UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise _UsageError(f"{self.prog}: error: {message}\n{self.format_usage()}")


def _load_ensemble(path) -> Ensemble:
    if path is None:
        raise _UsageError("--in is required")
    return io.ensemble_from_dict(io.read_json(path))


def _emit(args, payload) -> None:
    text = io.dumps(payload)
    if getattr(args, "out", None):
        io.atomic_write(args.out, text + "\n")
    else:
        sys.stdout.write(text + "\n")


# --- subcommands ---------------------------------------------------------------------


def cmd_certify(args):
    E = _load_ensemble(args.inp)
    if E.is_real and args.method != "auto":
        v = certify_real_exact(E, tol=args.tol, exact=args.exact, method=args.method)
    else:
        v = certify(E, tol=args.tol, exact=args.exact, restarts=args.restarts, seed=args.seed)
    _emit(args, v)


def cmd_falsify(args):
    E = _load_ensemble(args.inp)
    if E.is_real:
        pair = brute_force_collision_search(E, mode="random", seed=args.seed)
        v = Verdict(Outcome.NOT_RETRIEVABLE, witness=pair) if pair is not None else Verdict(Outcome.INCONCLUSIVE)
    else:
        v = falsify_complex(E, restarts=args.restarts, seed=args.seed)
    _emit(args, v)


def cmd_construct(args):
    kind = args.kind
    if kind == "generic":
        E = sample_generic(args.field, _single(args.m, "--m"), args.d, args.seed)
    elif kind == "real-minimal":
        if args.inp:
            pairs = io.shift_pairs_from_dict(io.read_json(args.inp))
        else:
            pairs = np.column_stack([np.ones(args.d), np.zeros(args.d)])
        E = build_real_minimal(args.d, pairs)
    else:
        if args.inp:
            triples = io.shift_triples_from_dict(io.read_json(args.inp))
        else:
            triples = np.tile([1j, 0, 1], (args.d, 1))
        B = np.eye(args.d) if args.seed is None else random_nonsingular(args.d, args.seed)
        E = build_complex_minimal(B, triples, tol=args.tol)
    _emit(args, E)


def cmd_measure(args):
    E = _load_ensemble(args.inp)
    if args.signal is None:
        raise _UsageError("--signal is required")
    x = io.signal_from_dict(io.read_json(args.signal))
    _emit(args, io.magnitudes_to_dict(measure(E, x)))


def cmd_recover(args):
    E = _load_ensemble(args.inp)
    if args.mags is None:
        raise _UsageError("--mags is required")
    mags = io.magnitudes_from_dict(io.read_json(args.mags))
    cfg = GaussNewtonConfig(restarts=args.restarts, seed=args.seed)
    r = recover_gauss_newton(E, mags, cfg=cfg) if args.gauss_newton else recover(E, mags, cfg=cfg)
    _emit(args, r)


def cmd_perturb(args):
    if args.delta is None:
        raise _UsageError("--delta is required")
    if args.inp:
        E = _load_ensemble(args.inp)
    elif args.kind == "real":
        E = build_real_minimal(args.d, np.column_stack([np.ones(args.d), np.zeros(args.d)]))
    else:
        E = build_complex_minimal(np.eye(args.d), np.tile([1j, 0, 1], (args.d, 1)))
    if args.inp and E.d != args.d:
        raise DomainError(f"dimension mismatch: --d {args.d} but ensemble has d={E.d}")
    rep = perturb_real(E, args.delta) if args.kind == "real" else perturb_complex(E, args.delta)
    _emit(args, rep)


def cmd_sparse_certify(args):
    E = _load_ensemble(args.inp)
    if args.s is None:
        raise _UsageError("--s is required")
    s = _single(args.s, "--s")
    if E.is_real:
        v = certify_sparse_real_exact(E, s, tol=args.tol)
    else:
        v = falsify_sparse_complex(E, s, restarts=args.restarts, seed=args.seed)
    _emit(args, v)


def cmd_stability(args):
    E = _load_ensemble(args.inp)
    if args.ratios and args.out and os.path.abspath(args.ratios) == os.path.abspath(args.out):
        raise DomainError("output paths must be distinct")
    est = estimate_lipschitz(E, args.radius, args.pairs, seed=args.seed, keep_ratios=bool(args.ratios))
    if args.ratios:
        buf = _io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        keys = ("c1", "C1", "c2", "C2")
        w.writerow(("pair",) + keys)
        for i, row in enumerate(zip(*(est.ratios[k] for k in keys))):
            w.writerow([i] + [repr(float(v)) for v in row])
        io.atomic_write(args.ratios, buf.getvalue())
    _emit(args, est)


def cmd_experiment(args):
    spec = ExperimentSpec(
        kind=args.kind,
        field=args.field,
        d=args.d_range,
        m=args.m if args.m is not None else "1",
        s=args.s if args.s is not None else "0",
        trials=args.trials,
        seed=args.seed if args.seed is not None else 0,
        out=args.out,
        restarts=args.restarts,
        radius=args.radius,
        pairs=args.pairs,
        tol=args.tol,
    )
    rows = run_and_write(spec, jobs=args.jobs)
    summary = [{"d": c[0], "m": c[1], "s": c[2], "fractions": f} for c, f in sorted(summarize(rows).items())]
    text = io.dumps({"kind": spec.kind.value, "rows": len(rows), "cells": summary})
    # with --out the CSV goes to the file and the summary to stdout
    sys.stdout.write(text + "\n")


def cmd_validate(args):
    if args.inp is None:
        raise _UsageError("--in is required")
    obj = io.read_json(args.inp)
    kind = args.kind or io.guess_kind(obj)
    if kind is None:
        raise FormatError("cannot tell what kind of payload this is; pass --kind")
    problems = io.schema_errors(obj, kind)
    if problems:
        raise FormatError(f"{kind} schema: " + "; ".join(problems))
    if kind == "ensemble":
        problems = validate_ensemble(io.ensemble_from_dict(obj))
        if problems:
            raise DomainError("invalid ensemble: " + "; ".join(problems))
    sys.stdout.write(io.dumps({"valid": True, "kind": kind}) + "\n")


def _single(values, flag) -> int:
    from .experiment import parse_range

    vals = parse_range(values)
    if len(vals) != 1:
        raise _UsageError(f"{flag} takes a single value here")
    return vals[0]


# --- parser --------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = _Parser(prog="affpr", description="Affine phase retrieval: certify, construct, recover.")
    p.add_argument("--version", action="version", version=f"affpr {__version__}")
    sub = p.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def add(name, fn, help):
        sp = sub.add_parser(name, help=help)
        sp.set_defaults(fn=fn)
        sp.add_argument("--out", help="output path (default: stdout)")
        return sp

    def inp(sp, required=False):
        sp.add_argument("--in", dest="inp", required=required, help="input JSON path")

    def tol(sp):
        sp.add_argument("--tol", type=float, default=1e-10, help="relative rank tolerance")

    def search(sp, restarts=32):
        sp.add_argument("--restarts", type=int, default=restarts)
        sp.add_argument("--seed", type=int, default=0)

    sp = add("certify", cmd_certify, "decide retrievability of an ensemble")
    inp(sp, True)
    tol(sp)
    search(sp)
    sp.add_argument("--exact", action="store_true", help="rational rank arithmetic (real only)")
    sp.add_argument("--method", choices=("auto", "flats", "levels"), default="auto")

    sp = add("falsify", cmd_falsify, "search for a collision")
    inp(sp, True)
    search(sp)

    sp = add("construct", cmd_construct, "build an ensemble")
    sp.add_argument("--kind", choices=("real-minimal", "complex-minimal", "generic"), required=True)
    inp(sp)
    sp.add_argument("--field", choices=("real", "complex"), default="real")
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--m")
    sp.add_argument("--seed", type=int)
    tol(sp)

    sp = add("measure", cmd_measure, "magnitudes of a signal")
    inp(sp, True)
    sp.add_argument("--signal", required=True, help="signal JSON path")

    sp = add("recover", cmd_recover, "recover a signal from magnitudes")
    inp(sp, True)
    sp.add_argument("--mags", required=True, help="magnitudes JSON path")
    search(sp, restarts=10)
    sp.add_argument("--gauss-newton", action="store_true", help="skip the closed-form solvers")

    sp = add("perturb", cmd_perturb, "non-injective perturbation of a minimal ensemble")
    sp.add_argument("--kind", choices=("real", "complex"), required=True)
    sp.add_argument("--d", type=int, required=True)
    sp.add_argument("--delta", type=float, required=True)
    inp(sp)

    sp = add("sparse-certify", cmd_sparse_certify, "retrievability on s-sparse signals")
    inp(sp, True)
    sp.add_argument("--s", required=True)
    tol(sp)
    search(sp, restarts=50)

    sp = add("stability", cmd_stability, "empirical bi-Lipschitz constants")
    inp(sp, True)
    sp.add_argument("--radius", type=float, default=5.0)
    sp.add_argument("--pairs", type=int, default=10_000)
    sp.add_argument("--seed", type=int, default=0)
    sp.add_argument("--ratios", help="CSV path for every sampled ratio")

    sp = add("experiment", cmd_experiment, "seeded Monte Carlo table")
    sp.add_argument("--kind", choices=[k.value for k in Kind], required=True)
    sp.add_argument("--field", choices=("real", "complex"), default="real")
    sp.add_argument("--d", dest="d_range", required=True, help="value or range a..b")
    sp.add_argument("--m", help="value or range a..b")
    sp.add_argument("--s", help="value or range a..b")
    sp.add_argument("--trials", type=int, default=10)
    sp.add_argument("--seed", type=int)
    sp.add_argument("--jobs", type=int, default=1)
    sp.add_argument("--restarts", type=int, default=32)
    sp.add_argument("--radius", type=float, default=5.0)
    sp.add_argument("--pairs", type=int, default=10_000)
    tol(sp)

    sp = add("validate", cmd_validate, "check a JSON payload against its schema")
    inp(sp, True)
    sp.add_argument("--kind", choices=io.SCHEMAS)
    return p


def _error(kind: str, exc: BaseException) -> None:
    payload = {"error": type(exc).__name__, "kind": kind, "message": str(exc)}
    sys.stderr.write(json.dumps(payload) + "\n")


def run_cli(argv=None) -> int:
    level = os.environ.get("AFFPR_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), format="%(levelname)s %(name)s: %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args.fn(args)
    except SystemExit as e:  # --help / --version
        return int(e.code or 0)
    except _UsageError as e:
        sys.stderr.write(str(e) + ("\n" if not str(e).endswith("\n") else ""))
        return 2
    except DomainError as e:
        _error("domain", e)
        return 1
    except (FormatError, OSError) as e:
        _error("format", e)
        return 2
    return 0


def main() -> None:
    sys.exit(run_cli())
