"""Sparse time-dependent Hermitian Hamiltonians with column-oracle access.

A Hamiltonian is stored structurally: every off-diagonal matrix element is a
pair of coefficient functions (real and imaginary part) attached to an index
pair ``row < col``, with the conjugate element implied.  Diagonal elements are
real coefficient functions.  The sparsity pattern is fixed in time; only the
coefficient values vary.

Conventions:
  * each per-entry coefficient is ``c + lin*t + amp*sin(freq*t + phase)``,
    which has an exact closed-form derivative;
  * the column oracle enumerates structural nonzeros of a column in ascending
    row order (a convention of this implementation, slot indices are 1-based);
  * dense adapters are only available up to ``DENSE_QUBIT_CAP`` qubits.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

DENSE_QUBIT_CAP = 10

_COEFF_KEYS = {"c": "constant", "lin": "linear", "sin_amp": "sin_amplitude",
               "sin_freq": "sin_frequency", "sin_phase": "sin_phase"}


class SpecFormatError(ValueError):
    """Raised when a Hamiltonian spec document cannot be parsed."""


class SpecValidationError(ValueError):
    """Raised when a parsed document violates a structural invariant."""


class DimensionCapError(ValueError):
    """Raised when a dense adapter is requested above the qubit cap."""


@dataclass(frozen=True)
class Coefficient:
    """Real scalar function of time: constant + linear ramp + one sinusoid."""

    constant: float = 0.0
    linear: float = 0.0
    sin_amplitude: float = 0.0
    sin_frequency: float = 0.0
    sin_phase: float = 0.0

    def value(self, t):
        """Evaluate at time ``t`` (scalar or ndarray)."""
        return (self.constant + self.linear * t
                + self.sin_amplitude * np.sin(self.sin_frequency * t + self.sin_phase))

    def derivative(self, t):
        """Exact time derivative at ``t`` (scalar or ndarray)."""
        return (self.linear + self.sin_amplitude * self.sin_frequency
                * np.cos(self.sin_frequency * t + self.sin_phase))

    @property
    def is_structurally_zero(self) -> bool:
        return self.constant == 0.0 and self.linear == 0.0 and self.sin_amplitude == 0.0

    @property
    def is_constant(self) -> bool:
        return self.linear == 0.0 and (self.sin_amplitude == 0.0 or self.sin_frequency == 0.0)

    @classmethod
    def from_json_dict(cls, obj, where: str) -> "Coefficient":
        if not isinstance(obj, dict):
            raise SpecFormatError(f"{where}: coefficient must be an object, got {type(obj).__name__}")
        unknown = set(obj) - set(_COEFF_KEYS)
        if unknown:
            raise SpecFormatError(f"{where}: unknown coefficient fields {sorted(unknown)}")
        kwargs = {}
        for key, attr in _COEFF_KEYS.items():
            val = obj.get(key, 0.0)
            if not isinstance(val, (int, float)) or isinstance(val, bool):
                raise SpecFormatError(f"{where}.{key}: expected a number")
            if not math.isfinite(val):
                raise SpecValidationError(f"{where}.{key}: coefficient must be finite")
            kwargs[attr] = float(val)
        return cls(**kwargs)

    def to_json_dict(self) -> dict:
        out = {}
        for key, attr in _COEFF_KEYS.items():
            val = getattr(self, attr)
            if val != 0.0:
                out[key] = val
        return out


ZERO_COEFF = Coefficient()


@dataclass(frozen=True)
class MatrixEntry:
    """Off-diagonal structural entry at (row, col) with row < col.

    The matrix element is ``re(t) + 1j*im(t)``; the (col, row) element is the
    complex conjugate and is not stored.
    """

    row: int
    col: int
    re: Coefficient
    im: Coefficient

    def value(self, t) -> complex:
        return complex(self.re.value(t)) + 1j * complex(self.im.value(t))


@dataclass(frozen=True)
class DiagonalEntry:
    """Diagonal structural entry; Hermiticity forces it to be real."""

    index: int
    re: Coefficient


@dataclass(frozen=True)
class NormReport:
    """Grid maxima of the spectral norm, derivative norm, and entry magnitude."""

    spectral_norm_max: float
    derivative_norm_max: float
    entry_norm_max: float
    sample_count: int


class TimeDependentHamiltonian:
    """d-sparse Hermitian matrix-valued function of time on ``n_qubits`` qubits."""

    def __init__(self, n_qubits: int, d: int, entries, diag):
        if n_qubits < 1:
            raise SpecValidationError("n_qubits must be >= 1")
        if d < 1:
            raise SpecValidationError("d must be >= 1")
        self.n_qubits = int(n_qubits)
        self.d = int(d)
        self.entries = tuple(sorted(entries, key=lambda e: (e.row, e.col)))
        self.diag = tuple(sorted(diag, key=lambda e: e.index))
        self._validate()
        self._columns = self._build_columns()

    # -- structure -----------------------------------------------------------

    @property
    def dim(self) -> int:
        return 1 << self.n_qubits

    def _validate(self):
        dim = self.dim
        seen_pairs = set()
        row_counts: dict[int, int] = {}
        for e in self.entries:
            if not (0 <= e.row < dim and 0 <= e.col < dim):
                raise SpecValidationError(f"entry ({e.row},{e.col}) out of range for dim {dim}")
            if e.row >= e.col:
                raise SpecValidationError(
                    f"entry ({e.row},{e.col}): only row < col pairs are stored; "
                    "the conjugate entry is implied")
            if (e.row, e.col) in seen_pairs:
                raise SpecValidationError(f"duplicate entry ({e.row},{e.col})")
            seen_pairs.add((e.row, e.col))
            if e.re.is_structurally_zero and e.im.is_structurally_zero:
                raise SpecValidationError(
                    f"entry ({e.row},{e.col}) is identically zero and must not be stored")
            row_counts[e.row] = row_counts.get(e.row, 0) + 1
            row_counts[e.col] = row_counts.get(e.col, 0) + 1
        seen_diag = set()
        for q in self.diag:
            if not (0 <= q.index < dim):
                raise SpecValidationError(f"diagonal index {q.index} out of range for dim {dim}")
            if q.index in seen_diag:
                raise SpecValidationError(f"duplicate diagonal entry {q.index}")
            seen_diag.add(q.index)
            if q.re.is_structurally_zero:
                raise SpecValidationError(
                    f"diagonal entry {q.index} is identically zero and must not be stored")
            row_counts[q.index] = row_counts.get(q.index, 0) + 1
        for row, count in row_counts.items():
            if count > self.d:
                raise SpecValidationError(
                    f"row {row} has {count} structural nonzeros, exceeding d={self.d}")

    def _build_columns(self):
        # column index -> list of (row, value callable source) in ascending row order
        cols: dict[int, list] = {}
        for e in self.entries:
            # stored element sits at (row, col); conjugate at (col, row)
            cols.setdefault(e.col, []).append((e.row, e, False))
            cols.setdefault(e.row, []).append((e.col, e, True))
        for q in self.diag:
            cols.setdefault(q.index, []).append((q.index, q, False))
        for lst in cols.values():
            lst.sort(key=lambda item: item[0])
        return cols

    @property
    def is_time_dependent(self) -> bool:
        coeffs = [e.re for e in self.entries] + [e.im for e in self.entries] + [q.re for q in self.diag]
        return not all(c.is_constant for c in coeffs)

    def row_nonzero_counts(self) -> dict[int, int]:
        counts: dict[int, int] = {}
        for col, lst in self._columns.items():
            counts[col] = len(lst)
        return counts

    # -- oracle and dense adapters -------------------------------------------

    def oracle_query(self, column: int, slot: int, t: float):
        """Return the ``slot``-th structural nonzero of ``column`` at time ``t``.

        Slots are 1-based and ordered by ascending row; returns None when the
        column has fewer structural nonzeros than ``slot``.
        """
        if not (0 <= column < self.dim):
            raise IndexError(f"column {column} out of range for dim {self.dim}")
        if not (1 <= slot <= self.d):
            raise IndexError(f"slot {slot} out of range 1..{self.d}")
        lst = self._columns.get(column, [])
        if slot > len(lst):
            return None
        row, src, conj = lst[slot - 1]
        if isinstance(src, DiagonalEntry):
            return row, complex(src.re.value(t))
        val = src.value(t)
        return row, (val.conjugate() if conj else val)

    def dense(self, t: float, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
        """Dense Hermitian matrix at time ``t`` (desk-scale verification only)."""
        if self.n_qubits > cap:
            raise DimensionCapError(
                f"dense adapter limited to {cap} qubits, got {self.n_qubits}")
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for e in self.entries:
            val = e.value(t)
            out[e.row, e.col] = val
            out[e.col, e.row] = val.conjugate()
        for q in self.diag:
            out[q.index, q.index] = q.re.value(t)
        return out

    def dense_derivative(self, t: float, cap: int = DENSE_QUBIT_CAP) -> np.ndarray:
        if self.n_qubits > cap:
            raise DimensionCapError(
                f"dense adapter limited to {cap} qubits, got {self.n_qubits}")
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for e in self.entries:
            val = complex(e.re.derivative(t)) + 1j * complex(e.im.derivative(t))
            out[e.row, e.col] = val
            out[e.col, e.row] = val.conjugate()
        for q in self.diag:
            out[q.index, q.index] = q.re.derivative(t)
        return out

    def norms(self, t: float, samples: int = 257, cap: int = DENSE_QUBIT_CAP) -> NormReport:
        """Grid maxima over [0, t] of spectral/derivative/entry norms.

        Uses dense eigendecomposition on a uniform grid; the grid maximum is a
        lower bound on the true supremum, converging as the grid refines.
        """
        if samples < 2:
            raise ValueError("samples must be >= 2")
        grid = np.linspace(0.0, t, samples)
        spec = 0.0
        dspec = 0.0
        entry = 0.0
        for tp in grid:
            h = self.dense(tp, cap=cap)
            spec = max(spec, float(np.max(np.abs(np.linalg.eigvalsh(h)))))
            hd = self.dense_derivative(tp, cap=cap)
            dspec = max(dspec, float(np.max(np.abs(np.linalg.eigvalsh(hd)))))
            off = float(np.max(np.abs(h))) if h.size else 0.0
            entry = max(entry, off)
        return NormReport(spectral_norm_max=spec, derivative_norm_max=dspec,
                          entry_norm_max=entry, sample_count=samples)

    # -- serialization ---------------------------------------------------------

    @classmethod
    def from_json_dict(cls, obj: dict) -> "TimeDependentHamiltonian":
        if not isinstance(obj, dict):
            raise SpecFormatError("top level must be a JSON object")
        for key in ("n_qubits", "d"):
            if key not in obj:
                raise SpecFormatError(f"missing required field '{key}'")
            if not isinstance(obj[key], int) or isinstance(obj[key], bool):
                raise SpecFormatError(f"field '{key}' must be an integer")
        unknown = set(obj) - {"n_qubits", "d", "entries", "diag"}
        if unknown:
            raise SpecFormatError(f"unknown top-level fields {sorted(unknown)}")
        entries = []
        for i, ent in enumerate(obj.get("entries", [])):
            where = f"entries[{i}]"
            if not isinstance(ent, dict):
                raise SpecFormatError(f"{where}: must be an object")
            for key in ("row", "col"):
                if key not in ent or not isinstance(ent[key], int) or isinstance(ent[key], bool):
                    raise SpecFormatError(f"{where}: integer field '{key}' required")
            unknown = set(ent) - {"row", "col", "re", "im"}
            if unknown:
                raise SpecFormatError(f"{where}: unknown fields {sorted(unknown)}")
            re = Coefficient.from_json_dict(ent["re"], f"{where}.re") if "re" in ent else ZERO_COEFF
            im = Coefficient.from_json_dict(ent["im"], f"{where}.im") if "im" in ent else ZERO_COEFF
            entries.append(MatrixEntry(row=ent["row"], col=ent["col"], re=re, im=im))
        diag = []
        for i, ent in enumerate(obj.get("diag", [])):
            where = f"diag[{i}]"
            if not isinstance(ent, dict):
                raise SpecFormatError(f"{where}: must be an object")
            if "index" not in ent or not isinstance(ent["index"], int) or isinstance(ent["index"], bool):
                raise SpecFormatError(f"{where}: integer field 'index' required")
            unknown = set(ent) - {"index", "re"}
            if unknown:
                # a complex diagonal would violate Hermiticity
                raise SpecValidationError(
                    f"{where}: diagonal entries must be real (unexpected fields {sorted(unknown)})")
            re = Coefficient.from_json_dict(ent["re"], f"{where}.re") if "re" in ent else ZERO_COEFF
            diag.append(DiagonalEntry(index=ent["index"], re=re))
        return cls(n_qubits=obj["n_qubits"], d=obj["d"], entries=entries, diag=diag)

    def to_json_dict(self) -> dict:
        return {
            "n_qubits": self.n_qubits,
            "d": self.d,
            "entries": [
                {"row": e.row, "col": e.col, "re": e.re.to_json_dict(), "im": e.im.to_json_dict()}
                for e in self.entries
            ],
            "diag": [{"index": q.index, "re": q.re.to_json_dict()} for q in self.diag],
        }


def parse_spec(text: str) -> TimeDependentHamiltonian:
    """Parse a JSON Hamiltonian spec document, validating all invariants."""
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecFormatError(f"invalid JSON at line {exc.lineno}, column {exc.colno}: {exc.msg}") from exc
    return TimeDependentHamiltonian.from_json_dict(obj)


def load_spec(path) -> TimeDependentHamiltonian:
    with open(path, "r", encoding="utf-8") as fh:
        return parse_spec(fh.read())
