"""Partition of a d-sparse Hamiltonian into real/imaginary 1-sparse terms.

The off-diagonal sparsity pattern is an undirected graph on basis indices.  A
proper edge coloring splits it into matchings; each matching contributes a
real and (when present) an imaginary 1-sparse Hermitian term.  All diagonal
elements collect into a single real diagonal term, since diagonal support
never collides.  The partition is exact: the terms sum entrywise to the
original matrix at every time.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .hamiltonian import TimeDependentHamiltonian

KIND_REAL_OFFDIAG = "real-offdiagonal"
KIND_REAL_DIAG = "real-diagonal"
KIND_IMAG_OFFDIAG = "imaginary-offdiagonal"

DIAGONAL_COLOR = "diag"


@dataclass(frozen=True)
class ColoringPlan:
    """Proper edge coloring of the off-diagonal sparsity graph."""

    color_of_edge: dict
    diagonal_color: str
    num_colors: int

    def edges_of_color(self, color: int):
        return sorted(pair for pair, c in self.color_of_edge.items() if c == color)


def color_edges(H: TimeDependentHamiltonian) -> ColoringPlan:
    """Greedy proper edge coloring, deterministic in (row, col) order.

    Greedy coloring of a graph with maximum degree D uses at most 2D-1 colors;
    here D <= d, so at most 2d-1 colors for the off-diagonal graph.
    """
    edges = [(e.row, e.col) for e in H.entries]
    edges.sort()
    used_at_vertex: dict[int, set] = {}
    color_of_edge: dict[tuple, int] = {}
    num_colors = 0
    for (a, b) in edges:
        taken = used_at_vertex.get(a, set()) | used_at_vertex.get(b, set())
        color = 0
        while color in taken:
            color += 1
        color_of_edge[(a, b)] = color
        used_at_vertex.setdefault(a, set()).add(color)
        used_at_vertex.setdefault(b, set()).add(color)
        num_colors = max(num_colors, color + 1)
    return ColoringPlan(color_of_edge=color_of_edge, diagonal_color=DIAGONAL_COLOR,
                        num_colors=num_colors)


@dataclass(frozen=True)
class OneSparseTerm:
    """1-sparse Hermitian term, real or purely imaginary off the diagonal.

    ``support`` lists disjoint index pairs (a, b) with a < b, or singletons
    (a,) for the diagonal kind.  ``coeffs`` holds the aligned real coefficient
    functions w(t); the matrix element convention is:

      real-offdiagonal:       H[a,b] = w,     H[b,a] = w
      imaginary-offdiagonal:  H[a,b] = i*w,   H[b,a] = -i*w
      real-diagonal:          H[a,a] = w
    """

    dim: int
    color: object
    kind: str
    support: tuple
    coeffs: tuple
    parent: object = None

    def __post_init__(self):
        rows = [i for pair in self.support for i in pair]
        if len(set(rows)) != len(rows):
            raise ValueError("support is not 1-sparse: an index appears twice")
        if len(self.support) != len(self.coeffs):
            raise ValueError("support and coeffs must align")

    @property
    def is_diagonal(self) -> bool:
        return self.kind == KIND_REAL_DIAG

    def values(self, t) -> np.ndarray:
        """Coefficient values w(t); with array t, shape is (len(t), support)."""
        t = np.asarray(t, dtype=float)
        if t.ndim == 0:
            return np.array([c.value(float(t)) for c in self.coeffs], dtype=float)
        return np.stack([np.asarray(c.value(t), dtype=float) for c in self.coeffs], axis=-1)

    def max_entry(self, t) -> float:
        vals = self.values(t)
        return float(np.max(np.abs(vals))) if vals.size else 0.0

    def dense(self, t) -> np.ndarray:
        out = np.zeros((self.dim, self.dim), dtype=np.complex128)
        vals = self.values(t)
        for pair, w in zip(self.support, vals):
            if self.is_diagonal:
                out[pair[0], pair[0]] = w
            elif self.kind == KIND_REAL_OFFDIAG:
                a, b = pair
                out[a, b] = w
                out[b, a] = w
            else:
                a, b = pair
                out[a, b] = 1j * w
                out[b, a] = -1j * w
        return out


def one_sparse_terms(H: TimeDependentHamiltonian, plan: ColoringPlan) -> list[OneSparseTerm]:
    """Build the 1-sparse terms for a coloring plan.

    Each color class yields up to two terms (real first, then imaginary);
    colors are emitted in ascending order and the diagonal term comes last.
    Terms with no structurally nonzero coefficient are dropped.
    """
    dim = H.dim
    entry_by_pair = {(e.row, e.col): e for e in H.entries}
    terms: list[OneSparseTerm] = []
    for color in range(plan.num_colors):
        pairs = plan.edges_of_color(color)
        real_support, real_coeffs = [], []
        imag_support, imag_coeffs = [], []
        for pair in pairs:
            ent = entry_by_pair[pair]
            if not ent.re.is_structurally_zero:
                real_support.append(pair)
                real_coeffs.append(ent.re)
            if not ent.im.is_structurally_zero:
                imag_support.append(pair)
                imag_coeffs.append(ent.im)
        if real_support:
            terms.append(OneSparseTerm(dim=dim, color=color, kind=KIND_REAL_OFFDIAG,
                                       support=tuple(real_support), coeffs=tuple(real_coeffs),
                                       parent=H))
        if imag_support:
            terms.append(OneSparseTerm(dim=dim, color=color, kind=KIND_IMAG_OFFDIAG,
                                       support=tuple(imag_support), coeffs=tuple(imag_coeffs),
                                       parent=H))
    if H.diag:
        terms.append(OneSparseTerm(
            dim=dim, color=plan.diagonal_color, kind=KIND_REAL_DIAG,
            support=tuple((q.index,) for q in H.diag),
            coeffs=tuple(q.re for q in H.diag), parent=H))
    return terms


@dataclass(frozen=True)
class PartitionReport:
    max_entry_deviation: float
    one_sparse_flags: tuple


def verify_partition(H: TimeDependentHamiltonian, terms, t: float) -> PartitionReport:
    """Entrywise deviation of the term sum from H(t); zero for a correct build."""
    total = np.zeros((H.dim, H.dim), dtype=np.complex128)
    flags = []
    for term in terms:
        total += term.dense(t)
        rows = [i for pair in term.support for i in pair]
        flags.append(len(set(rows)) == len(rows))
    deviation = float(np.max(np.abs(total - H.dense(t)))) if terms else float(np.max(np.abs(H.dense(t))))
    return PartitionReport(max_entry_deviation=deviation, one_sparse_flags=tuple(flags))
