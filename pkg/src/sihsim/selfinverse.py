"""Decomposition of 1-sparse terms into equally weighted self-inverse unitaries.

A frozen 1-sparse real (or purely imaginary) Hamiltonian G with max entry g is
rounded entrywise to the lattice (g/ell)*{-ell..ell} and expressed as
(g/ell) * sum_j G_j, where every G_j is 1-sparse with entries in {-1, 0, +1}
(or {-i, 0, +i}).  Rounding ties go toward zero.  A G_j with empty rows is not
unitary; it is completed by splitting into two terms whose empty rows carry +1
and -1 respectively.  When any split occurs the family weight is halved and
unsplit terms are duplicated, so all members carry one equal weight.

Terms are stored exactly as a permutation plus a fourth-root-of-unity phase
per basis index, so involution and commutation checks are integer arithmetic.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .onesparse import KIND_IMAG_OFFDIAG, KIND_REAL_DIAG, KIND_REAL_OFFDIAG, OneSparseTerm

# phase codes: i**code, code in {0, 1, 2, 3}
_PHASES = np.array([1.0, 1.0j, -1.0, -1.0j], dtype=np.complex128)


def round_half_toward_zero(x: np.ndarray) -> np.ndarray:
    """Round to nearest integer with ties toward zero."""
    x = np.asarray(x, dtype=float)
    return (np.sign(x) * np.ceil(np.abs(x) - 0.5)).astype(np.int64)


@dataclass(frozen=True, eq=False)
class SelfInverseTerm:
    """1-sparse Hermitian involution: U|a> = i**code[a] |perm[a]>, U*U = I."""

    perm: np.ndarray
    phase_code: np.ndarray

    def __post_init__(self):
        self.perm.setflags(write=False)
        self.phase_code.setflags(write=False)

    @property
    def dim(self) -> int:
        return self.perm.shape[0]

    def apply(self, index: int):
        """Exact action on a basis state: (new index, phase)."""
        if not (0 <= index < self.dim):
            raise IndexError(f"basis index {index} out of range for dim {self.dim}")
        return int(self.perm[index]), complex(_PHASES[self.phase_code[index]])

    def matvec(self, vec: np.ndarray) -> np.ndarray:
        out = np.zeros_like(np.asarray(vec, dtype=np.complex128))
        out[self.perm] = _PHASES[self.phase_code] * vec
        return out

    def dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        out[self.perm, np.arange(self.dim)] = _PHASES[self.phase_code]
        return out

    def is_involution(self) -> bool:
        """U*U == I, checked in exact integer arithmetic."""
        idx = np.arange(self.dim)
        if not np.array_equal(self.perm[self.perm], idx):
            return False
        return bool(np.all((self.phase_code + self.phase_code[self.perm]) % 4 == 0))

    def is_hermitian(self) -> bool:
        # for an involution with the code condition this coincides with unitarity
        return self.is_involution()

    def compose(self, other: "SelfInverseTerm"):
        """Integer data of the product self @ other."""
        perm = self.perm[other.perm]
        code = (other.phase_code + self.phase_code[other.perm]) % 4
        return perm, code

    def negated(self) -> "SelfInverseTerm":
        return SelfInverseTerm(perm=self.perm.copy(),
                               phase_code=((self.phase_code + 2) % 4).astype(np.int8))


def apply_term(term: SelfInverseTerm, index: int):
    return term.apply(index)


def _blocks_term(dim: int, kind: str, pairs, signs, fill_rows=None, fill_sign=1) -> SelfInverseTerm:
    perm = np.arange(dim, dtype=np.int64)
    code = np.zeros(dim, dtype=np.int8)
    for pair, sign in zip(pairs, signs):
        if kind == KIND_REAL_DIAG:
            (a,) = pair
            code[a] = 0 if sign > 0 else 2
        elif kind == KIND_REAL_OFFDIAG:
            a, b = pair
            perm[a], perm[b] = b, a
            code[a] = code[b] = 0 if sign > 0 else 2
        else:  # imaginary: sigma_y-type block with M[a,b] = i*sign, M[b,a] = -i*sign
            a, b = pair
            perm[a], perm[b] = b, a
            code[a] = 3 if sign > 0 else 1
            code[b] = 1 if sign > 0 else 3
    if fill_rows is not None and len(fill_rows):
        code[np.asarray(fill_rows, dtype=np.int64)] = 0 if fill_sign > 0 else 2
    return SelfInverseTerm(perm=perm, phase_code=code)


@dataclass
class RoundedData:
    """Rounding profile of a 1-sparse term on a grid of freeze times.

    All arrays are aligned on the time axis.  ``size`` is the family length
    after the empty-row split and equal-weight duplication; ``weight`` is the
    final equal weight carried by every family member.
    """

    g: np.ndarray
    ell: np.ndarray
    h: np.ndarray
    weight: np.ndarray
    size: np.ndarray
    split: np.ndarray


def rounded_data(term: OneSparseTerm, t0s, gamma: float) -> RoundedData:
    if gamma <= 0:
        raise ValueError("gamma must be positive")
    t0s = np.atleast_1d(np.asarray(t0s, dtype=float))
    w = term.values(t0s)  # (r, s)
    g = np.max(np.abs(w), axis=1)
    nonzero = g > 0
    safe_g = np.where(nonzero, g, 1.0)
    ell = np.where(nonzero, np.ceil(safe_g / (2.0 * gamma)).astype(np.int64), 0)
    ratio = ell[:, None] * (w / safe_g[:, None])
    h = round_half_toward_zero(ratio)
    h = np.clip(h, -ell[:, None], ell[:, None])
    covered = {i for pair in term.support for i in pair}
    covers_all = len(covered) == term.dim
    min_abs_h = np.min(np.abs(h), axis=1)
    split = nonzero & ((not covers_all) | (min_abs_h < ell))
    factor = np.where(split, 2, 1)
    size = np.where(nonzero, ell * factor, 0)
    weight = np.where(nonzero, safe_g / np.maximum(ell, 1) / factor, 0.0)
    return RoundedData(g=g, ell=ell, h=h, weight=weight, size=size, split=split)


def rounded_dense(term: OneSparseTerm, t0: float, gamma: float) -> np.ndarray:
    """Dense matrix of the rounded term (g/ell)*h placed on the support."""
    data = rounded_data(term, t0, gamma)
    out = np.zeros((term.dim, term.dim), dtype=np.complex128)
    if data.ell[0] == 0:
        return out
    scale = data.g[0] / data.ell[0]
    for pair, hval in zip(term.support, data.h[0]):
        v = scale * hval
        if term.kind == KIND_REAL_DIAG:
            out[pair[0], pair[0]] = v
        elif term.kind == KIND_REAL_OFFDIAG:
            out[pair[0], pair[1]] = v
            out[pair[1], pair[0]] = v
        else:
            out[pair[0], pair[1]] = 1j * v
            out[pair[1], pair[0]] = -1j * v
    return out


@dataclass
class SelfInverseFamily:
    """Equally weighted commuting self-inverse terms approximating a 1-sparse G."""

    weight: float
    ell: int
    g: float
    terms: list
    parent_kind: str
    t0: float
    dim: int

    def __len__(self):
        return len(self.terms)

    def reconstruct_dense(self) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        for term in self.terms:
            out += term.dense()
        return self.weight * out


def decompose(term: OneSparseTerm, t0: float, gamma: float) -> SelfInverseFamily:
    """Lemma-style decomposition of ``term`` frozen at ``t0``.

    Returns a family with max-norm error at most g/(2*ell) <= gamma.  A term
    that vanishes identically at ``t0`` yields an empty family of weight 0.
    """
    data = rounded_data(term, t0, gamma)
    g = float(data.g[0])
    dim = term.dim
    if g == 0.0:
        return SelfInverseFamily(weight=0.0, ell=0, g=0.0, terms=[],
                                 parent_kind=term.kind, t0=t0, dim=dim)
    ell = int(data.ell[0])
    h = data.h[0]
    signs = np.sign(h)
    abs_h = np.abs(h)
    covered = sorted({i for pair in term.support for i in pair})
    outside = np.setdiff1d(np.arange(dim), np.array(covered, dtype=np.int64))

    staged = []  # (base term blocks, empty rows) per j
    any_split = False
    for j in range(ell):
        active = abs_h > j
        pairs = [p for p, a in zip(term.support, active) if a]
        psigns = [int(s) for s, a in zip(signs, active) if a]
        inactive_rows = [i for p, a in zip(term.support, active) if not a for i in p]
        empty = np.concatenate([outside, np.array(inactive_rows, dtype=np.int64)])
        empty.sort()
        staged.append((pairs, psigns, empty))
        if empty.size:
            any_split = True

    terms = []
    for pairs, psigns, empty in staged:
        if empty.size:
            terms.append(_blocks_term(dim, term.kind, pairs, psigns, empty, +1))
            terms.append(_blocks_term(dim, term.kind, pairs, psigns, empty, -1))
        elif any_split:
            base = _blocks_term(dim, term.kind, pairs, psigns)
            terms.append(base)
            terms.append(base)
        else:
            terms.append(_blocks_term(dim, term.kind, pairs, psigns))

    weight = g / ell / (2.0 if any_split else 1.0)
    return SelfInverseFamily(weight=weight, ell=ell, g=g, terms=terms,
                             parent_kind=term.kind, t0=t0, dim=dim)


@dataclass(frozen=True)
class FamilyReport:
    max_norm_error: float
    max_commutator_norm: float
    max_involution_defect: float
    family_size: int
    size_bound: int

    @property
    def size_ok(self) -> bool:
        return self.family_size <= self.size_bound


def _pairwise_commute_exact(terms) -> bool:
    if len(terms) < 2:
        return True
    perms = np.stack([t.perm for t in terms])           # (k, dim)
    codes = np.stack([t.phase_code.astype(np.int64) for t in terms])
    # product[i, j] = terms[i] @ terms[j]
    perm_prod = perms[:, perms]                          # [i, j, a] = P_i[P_j[a]]
    code_prod = (codes[None, :, :] + codes[:, perms]) % 4
    return (np.array_equal(perm_prod, perm_prod.swapaxes(0, 1))
            and np.array_equal(code_prod, code_prod.swapaxes(0, 1)))


def verify_family(term: OneSparseTerm, t0: float, family: SelfInverseFamily) -> FamilyReport:
    """Check the family invariants; algebraic checks are exact, error is float."""
    defect = 0.0
    for u in family.terms:
        if not u.is_involution():
            sq = u.dense() @ u.dense()
            defect = max(defect, float(np.max(np.abs(sq - np.eye(u.dim)))))
    if _pairwise_commute_exact(family.terms):
        comm = 0.0
    else:
        comm = 0.0
        for i in range(len(family.terms)):
            for j in range(i + 1, len(family.terms)):
                a = family.terms[i].dense()
                b = family.terms[j].dense()
                comm = max(comm, float(np.max(np.abs(a @ b - b @ a))))
    err = float(np.max(np.abs(term.dense(t0) - family.reconstruct_dense())))
    return FamilyReport(max_norm_error=err, max_commutator_norm=comm,
                        max_involution_defect=defect, family_size=len(family),
                        size_bound=2 * family.ell + 2)
