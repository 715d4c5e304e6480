"""Measurement ensembles and the affine magnitude maps.

Row ``j`` of ``Ensemble.rows`` is stored as the linear functional itself, so
measurement ``j`` is ``|rows[j] @ x + shifts[j]|`` with no conjugation.  A row
written with Hermitian inner-product conventions corresponds to the entrywise
conjugate of the stored row; every magnitude-level statement is unaffected.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass

import numpy as np

from .errors import DomainError


class Field(str, enum.Enum):
    REAL = "real"
    COMPLEX = "complex"

    @property
    def dtype(self):
        return np.float64 if self is Field.REAL else np.complex128

    @property
    def real_dim(self) -> int:
        """Real dimension of one scalar."""
        return 1 if self is Field.REAL else 2


def _frozen(a):
    a.setflags(write=False)
    return a


@dataclass(frozen=True, eq=False)
class Ensemble:
    """The pair (A, b): ``m`` measurement functionals plus ``m`` shifts.

    Arrays are copied and made read-only.  Construction does not enforce the
    invariants; use :func:`validate_ensemble` (returns findings) or
    :func:`check_ensemble` (raises).
    """

    field: Field
    rows: np.ndarray
    shifts: np.ndarray

    def __post_init__(self):
        field = Field(self.field)
        rows = np.array(self.rows)
        shifts = np.array(self.shifts)
        # keep complex storage for real-tagged input with imaginary parts so
        # that validation can report it
        cplx = field is Field.COMPLEX or np.iscomplexobj(rows) or np.iscomplexobj(shifts)
        dtype = np.complex128 if cplx else np.float64
        rows = rows.astype(dtype)
        if rows.ndim == 1:
            rows = rows.reshape(-1, 1) if rows.size else rows.reshape(0, 0)
        object.__setattr__(self, "field", field)
        object.__setattr__(self, "rows", _frozen(rows))
        object.__setattr__(self, "shifts", _frozen(shifts.astype(dtype).ravel()))

    @property
    def m(self) -> int:
        return self.rows.shape[0]

    @property
    def d(self) -> int:
        return self.rows.shape[1] if self.rows.ndim == 2 else 0

    @property
    def is_real(self) -> bool:
        return self.field is Field.REAL

    def __eq__(self, other):
        if not isinstance(other, Ensemble):
            return NotImplemented
        return (
            self.field is other.field
            and self.rows.shape == other.rows.shape
            and np.array_equal(self.rows, other.rows)
            and np.array_equal(self.shifts, other.shifts)
        )

    __hash__ = None

    def __repr__(self):
        return f"Ensemble(field={self.field.value}, m={self.m}, d={self.d})"

    def scale(self) -> float:
        """``1 + ||b||^2 + ||A||_F^2``, the reference size for residual thresholds."""
        return 1.0 + float(np.sum(np.abs(self.shifts) ** 2) + np.sum(np.abs(self.rows) ** 2))

    def subset(self, idx) -> "Ensemble":
        idx = np.asarray(idx, dtype=int)
        return Ensemble(self.field, self.rows[idx], self.shifts[idx])

    def append(self, row, shift) -> "Ensemble":
        rows = np.vstack([self.rows, np.reshape(row, (1, -1))])
        return Ensemble(self.field, rows, np.append(self.shifts, shift))


def validate_ensemble(E: Ensemble) -> list[str]:
    """Return a list of invariant violations (empty when ``E`` is well formed)."""
    out = []
    if E.rows.ndim != 2:
        return [f"rows shape: expected 2-d array, got {E.rows.ndim}-d"]
    m, d = E.rows.shape
    if m < 1:
        out.append("m: need at least one measurement")
    if d < 1:
        out.append("d: need dimension at least 1")
    if E.shifts.shape != (m,):
        out.append(f"shifts length: expected {m}, got {E.shifts.size}")
    if E.field is Field.REAL and (
        np.any(np.imag(E.rows) != 0) or np.any(np.imag(E.shifts) != 0)
    ):
        out.append("real tag: nonzero imaginary part in a real ensemble")
    if not (np.all(np.isfinite(E.rows)) and np.all(np.isfinite(E.shifts))):
        out.append("finite: non-finite entries")
    return out


def check_ensemble(E: Ensemble, field: Field | None = None) -> Ensemble:
    problems = validate_ensemble(E)
    if problems:
        raise DomainError("invalid ensemble: " + "; ".join(problems))
    if field is not None and E.field is not Field(field):
        raise DomainError(f"field mismatch: need {Field(field).value}, got {E.field.value}")
    return E


def as_signal(E: Ensemble, x) -> np.ndarray:
    """Coerce ``x`` to a signal compatible with ``E`` or raise.

    Real-valued arrays are accepted for complex ensembles (R^d sits inside
    C^d); complex arrays with nonzero imaginary parts are rejected for real
    ensembles.
    """
    x = np.asarray(x)
    if x.ndim == 0:
        x = x.reshape(1)
    if x.ndim != 1 or x.shape[0] != E.d:
        raise DomainError(f"dimension mismatch: signal has shape {x.shape}, ensemble d={E.d}")
    if E.is_real:
        if np.iscomplexobj(x):
            if np.any(x.imag != 0):
                raise DomainError("field mismatch: complex signal for a real ensemble")
            x = x.real
        return x.astype(np.float64)
    return x.astype(np.complex128)


def affine_values(E: Ensemble, x) -> np.ndarray:
    """The affine forms ``rows @ x + shifts`` before taking moduli."""
    x = as_signal(E, x)
    return E.rows @ x + E.shifts


def measure(E: Ensemble, x) -> np.ndarray:
    """Magnitudes ``|<a_j, x> + b_j|`` for every measurement."""
    return np.abs(affine_values(E, x))


def measure_sq(E: Ensemble, x) -> np.ndarray:
    """Squared magnitudes, formed as ``re^2 + im^2`` rather than squaring :func:`measure`."""
    z = affine_values(E, x)
    if np.iscomplexobj(z):
        return z.real * z.real + z.imag * z.imag
    return z * z


def lift(E: Ensemble) -> np.ndarray:
    """Homogeneous ``m x (d+1)`` matrix ``[A | b]``."""
    return np.column_stack([E.rows, E.shifts])


def lift_signal(x) -> np.ndarray:
    """Append the constant coordinate 1."""
    x = np.asarray(x)
    return np.append(x, np.ones(1, dtype=x.dtype))


def classical_magnitudes(L: np.ndarray, xt) -> np.ndarray:
    """Shift-free magnitudes ``|L @ xt|``."""
    return np.abs(L @ np.asarray(xt))


def to_real(x) -> np.ndarray:
    """Stack real and imaginary parts, ``C^d -> R^{2d}``."""
    x = np.asarray(x)
    return np.concatenate([x.real, x.imag])


def from_real(w, d: int) -> np.ndarray:
    w = np.asarray(w, dtype=float)
    return w[:d] + 1j * w[d:]
