"""Seeded Monte Carlo experiments written as versioned CSV tables.

Every trial draws its ensemble from a seed that is a keyed hash of
``(master seed, d, m, s, trial)``, so a cell can be rerun in isolation and
the table does not depend on execution order or worker count.  Wall time is
deliberately left out of the table to keep reruns byte-identical.
"""

from __future__ import annotations

import csv
import enum
import hashlib
import io as _io
import itertools
import struct
from collections import defaultdict
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import io
from .certify import Outcome, certify_real_exact, falsify_complex
from .construct import build_real_minimal, perturb_real, rng_for, sample_generic
from .core import Field
from .errors import BudgetError, DomainError
from .sparse import WORK_BUDGET, certify_sparse_real_exact, falsify_sparse_complex, sparse_work_estimate
from .stability import estimate_lipschitz

CSV_VERSION = 1
_SEED_KEY = b"affpr.trial-seed.v1"


class Kind(str, enum.Enum):
    PHASE_TRANSITION = "phase-transition"
    SPARSE_TRANSITION = "sparse-transition"
    STABILITY_SWEEP = "stability-sweep"
    COUNTEREXAMPLE_DEMO = "counterexample-demo"


COLUMNS = {
    Kind.PHASE_TRANSITION: ("d", "m", "s", "trial", "seed", "outcome", "residual"),
    Kind.SPARSE_TRANSITION: ("d", "m", "s", "trial", "seed", "outcome", "support_pair"),
    Kind.STABILITY_SWEEP: ("d", "m", "s", "trial", "seed", "outcome", "c1_hat", "C1_hat", "c2_hat", "C2_hat", "row_norm_sum"),
    Kind.COUNTEREXAMPLE_DEMO: ("d", "m", "s", "trial", "seed", "outcome", "delta", "distance", "mismatch"),
}


def parse_range(text) -> tuple[int, ...]:
    """``"4"``, ``"4..8"`` (inclusive) or ``"2,3,5"`` to a tuple of ints."""
    if isinstance(text, int):
        return (text,)
    if isinstance(text, (tuple, list)):
        return tuple(int(t) for t in text)
    text = str(text).strip()
    try:
        if ".." in text:
            lo, hi = text.split("..", 1)
            lo, hi = int(lo), int(hi)
            if hi < lo:
                raise DomainError(f"empty range {text!r}")
            return tuple(range(lo, hi + 1))
        return tuple(int(t) for t in text.split(","))
    except ValueError:
        raise DomainError(f"cannot parse range {text!r}") from None


@dataclass(frozen=True)
class ExperimentSpec:
    kind: Kind
    field: Field = Field.REAL
    d: tuple = (2,)
    m: tuple = (4,)
    s: tuple = (0,)
    trials: int = 10
    seed: int = 0
    out: str | None = None
    restarts: int = 32
    radius: float = 5.0
    pairs: int = 10_000
    tol: float = 1e-10

    def __post_init__(self):
        object.__setattr__(self, "kind", Kind(self.kind))
        object.__setattr__(self, "field", Field(self.field))
        for name in ("d", "m", "s"):
            object.__setattr__(self, name, parse_range(getattr(self, name)))
            if not getattr(self, name):
                raise DomainError(f"empty range for {name}")
        if self.trials < 1:
            raise DomainError("trials must be at least 1")
        if min(self.d) < 1 or min(self.m) < 1 or min(self.s) < 0:
            raise DomainError("d and m must be positive, s nonnegative")
        if self.kind is Kind.SPARSE_TRANSITION:
            for d, s in itertools.product(self.d, self.s):
                if not 1 <= s <= d - 1:
                    raise DomainError(f"need 1 <= s <= d-1, got s={s}, d={d}")
            if self.field is Field.REAL:
                work = sum(sparse_work_estimate(m, d, s) for d, m, s in self.cells()) * self.trials
                if work > WORK_BUDGET * 100:
                    raise BudgetError(f"experiment work estimate {work:.3g} exceeds budget", estimate=work)
        if self.kind is Kind.STABILITY_SWEEP and (not self.radius > 0 or self.pairs < 2):
            raise DomainError("stability sweep needs radius > 0 and at least 2 pairs")

    def cells(self):
        return list(itertools.product(self.d, self.m, self.s))


def derive_seed(master: int, d: int, m: int, s: int, trial: int) -> int:
    """128-bit keyed BLAKE2b digest of the cell coordinates, matching PCG64's state width."""
    h = hashlib.blake2b(key=_SEED_KEY, digest_size=16)
    h.update(struct.pack("<5q", master, d, m, s, trial))
    return int.from_bytes(h.digest(), "little")


def _fmt(v) -> str:
    if isinstance(v, float):
        return repr(v)
    if isinstance(v, enum.Enum):
        return v.value
    return str(v)


def _trial(task):
    spec, d, m, s, trial = task
    seed = derive_seed(spec.seed, d, m, s, trial)
    kind = spec.kind
    if kind is Kind.PHASE_TRANSITION:
        E = sample_generic(spec.field, m, d, seed)
        if spec.field is Field.REAL:
            v = certify_real_exact(E, tol=spec.tol)
            res = v.witness.mismatch(E) if v.witness is not None else 0.0
        else:
            v = falsify_complex(E, restarts=spec.restarts, seed=seed)
            res = float(v.stats["best_residual"]) if v.witness is None else v.witness.mismatch(E)
        return (d, m, s, trial, seed, v.outcome, float(res))
    if kind is Kind.SPARSE_TRANSITION:
        E = sample_generic(spec.field, m, d, seed)
        if spec.field is Field.REAL:
            v = certify_sparse_real_exact(E, s, tol=spec.tol)
        else:
            v = falsify_sparse_complex(E, s, restarts=spec.restarts, seed=seed)
        sp = "" if v.support_pair is None else "|".join(" ".join(map(str, t)) for t in v.support_pair)
        return (d, m, s, trial, seed, v.outcome, sp)
    if kind is Kind.STABILITY_SWEEP:
        E = sample_generic(spec.field, m, d, seed)
        if spec.field is Field.REAL:
            outcome = certify_real_exact(E, tol=spec.tol).outcome
        else:
            outcome = Outcome.INCONCLUSIVE
        est = estimate_lipschitz(E, spec.radius, spec.pairs, seed=seed)
        bound = float(np.sum(np.linalg.norm(E.rows, axis=1)))
        return (d, m, s, trial, seed, outcome, est.c1_hat, est.C1_hat, est.c2_hat, est.C2_hat, bound)
    # counterexample demo: (I; I) with random b_11 and b_12 = 0, delta = 10^-(trial+1)
    if d < 2:
        raise DomainError("counterexample demo needs d >= 2")
    g = rng_for(seed)
    pairs = g.uniform(0.5, 2.0, size=(d, 2)) * g.choice([-1.0, 1.0], size=(d, 2))
    pairs[:, 1] = np.where(np.arange(d) == 0, 0.0, pairs[:, 1])
    E = build_real_minimal(d, pairs)
    delta = 10.0 ** -(trial + 1)
    rep = perturb_real(E, delta)
    outcome = certify_real_exact(rep.perturbed, tol=spec.tol).outcome
    return (d, 2 * d, s, trial, seed, outcome, delta, rep.distance, rep.witness.mismatch(rep.perturbed))


def tasks(spec: ExperimentSpec):
    if spec.kind is Kind.COUNTEREXAMPLE_DEMO:
        return [(spec, d, 2 * d, 0, t) for d in spec.d for t in range(spec.trials)]
    return [(spec, d, m, s, t) for d, m, s in spec.cells() for t in range(spec.trials)]


def run_experiment(spec: ExperimentSpec, jobs: int = 1) -> list[tuple]:
    """All rows in ``(cell, trial)`` order; ``jobs > 1`` uses worker processes."""
    work = tasks(spec)
    if jobs <= 1:
        return [_trial(t) for t in work]
    with ProcessPoolExecutor(max_workers=jobs) as ex:
        return list(ex.map(_trial, work, chunksize=max(1, len(work) // (4 * jobs))))


def to_csv(spec: ExperimentSpec, rows) -> str:
    buf = _io.StringIO()
    buf.write(f"# affpr-experiment v{CSV_VERSION} kind={spec.kind.value} field={spec.field.value} seed={spec.seed}\n")
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(COLUMNS[spec.kind])
    for r in rows:
        w.writerow([_fmt(v) for v in r])
    return buf.getvalue()


def read_csv(text: str) -> list[dict]:
    lines = [ln for ln in text.splitlines() if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def summarize(rows) -> dict:
    """Fraction of each outcome per ``(d, m, s)`` cell."""
    counts = defaultdict(lambda: defaultdict(int))
    for r in rows:
        counts[(r[0], r[1], r[2])][Outcome(r[5]).value] += 1
    out = {}
    for cell, c in counts.items():
        n = sum(c.values())
        out[cell] = {k: v / n for k, v in sorted(c.items())}
    return out


def run_and_write(spec: ExperimentSpec, jobs: int = 1) -> list[tuple]:
    rows = run_experiment(spec, jobs)
    if spec.out:
        io.atomic_write(spec.out, to_csv(spec, rows))
    return rows
