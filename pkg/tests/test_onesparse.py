import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from sihsim.hamiltonian import Coefficient, MatrixEntry, TimeDependentHamiltonian
from sihsim.onesparse import (KIND_IMAG_OFFDIAG, KIND_REAL_DIAG, KIND_REAL_OFFDIAG,
                              color_edges, one_sparse_terms, verify_partition)

from conftest import (const, random_hamiltonian, sigma_x_hamiltonian,
                      sigma_y_hamiltonian, sigma_xz_hamiltonian)


def _coloring_is_proper(plan):
    at_vertex = {}
    for (a, b), color in plan.color_of_edge.items():
        for v in (a, b):
            if (v, color) in at_vertex:
                return False
            at_vertex[(v, color)] = (a, b)
    return True


def test_single_edge_one_color():
    plan = color_edges(sigma_x_hamiltonian())
    assert plan.num_colors == 1


def test_path_graph_two_colors():
    H = TimeDependentHamiltonian(
        n_qubits=2, d=2,
        entries=[MatrixEntry(0, 1, const(1.0), Coefficient()),
                 MatrixEntry(1, 2, const(1.0), Coefficient())],
        diag=[])
    plan = color_edges(H)
    assert plan.num_colors == 2
    assert _coloring_is_proper(plan)


def test_random_coloring_proper_and_bounded(rng):
    for _ in range(10):
        d = int(rng.integers(1, 5))
        H = random_hamiltonian(rng, int(rng.integers(2, 6)), d)
        plan = color_edges(H)
        assert _coloring_is_proper(plan)
        assert plan.num_colors <= 2 * d - 1


@settings(max_examples=40, deadline=None)
@given(st.lists(st.tuples(st.integers(0, 15), st.integers(0, 15)), max_size=40),
       st.integers(0, 2**32 - 1))
def test_coloring_proper_on_arbitrary_graphs(raw_edges, seed):
    edges = sorted({(min(a, b), max(a, b)) for a, b in raw_edges if a != b})
    if not edges:
        return
    degree = {}
    for a, b in edges:
        degree[a] = degree.get(a, 0) + 1
        degree[b] = degree.get(b, 0) + 1
    d = max(degree.values())
    H = TimeDependentHamiltonian(
        n_qubits=4, d=d,
        entries=[MatrixEntry(a, b, const(1.0), Coefficient()) for a, b in edges],
        diag=[])
    plan = color_edges(H)
    assert _coloring_is_proper(plan)
    assert plan.num_colors <= 2 * d - 1


def test_coloring_deterministic(rng):
    H = random_hamiltonian(rng, 3, 3)
    assert color_edges(H).color_of_edge == color_edges(H).color_of_edge


def test_sigma_x_single_real_term():
    H = sigma_x_hamiltonian()
    terms = one_sparse_terms(H, color_edges(H))
    assert len(terms) == 1
    assert terms[0].kind == KIND_REAL_OFFDIAG
    assert np.array_equal(terms[0].dense(0.0), H.dense(0.0))


def test_sigma_y_single_imaginary_term():
    H = sigma_y_hamiltonian()
    terms = one_sparse_terms(H, color_edges(H))
    assert len(terms) == 1
    assert terms[0].kind == KIND_IMAG_OFFDIAG
    assert np.array_equal(terms[0].dense(0.0),
                          np.array([[0, -1j], [1j, 0]], dtype=complex))


def test_sigma_xz_two_terms_order():
    terms = one_sparse_terms(sigma_xz_hamiltonian(), color_edges(sigma_xz_hamiltonian()))
    assert [t.kind for t in terms] == [KIND_REAL_OFFDIAG, KIND_REAL_DIAG]


def test_partition_sums_exactly(rng):
    for _ in range(6):
        H = random_hamiltonian(rng, 4, 3)
        terms = one_sparse_terms(H, color_edges(H))
        for tp in rng.uniform(0.0, 2.0, size=10):
            total = sum(term.dense(float(tp)) for term in terms)
            assert np.array_equal(total, H.dense(float(tp)))


def test_terms_are_one_sparse_and_kind_pure(rng):
    H = random_hamiltonian(rng, 4, 4)
    for term in one_sparse_terms(H, color_edges(H)):
        rows = [i for pair in term.support for i in pair]
        assert len(set(rows)) == len(rows)
        dense = term.dense(0.37)
        assert np.array_equal(dense, dense.conj().T)
        if term.kind == KIND_IMAG_OFFDIAG:
            assert np.all(dense.real == 0)
            assert np.all(np.diag(dense) == 0)
        else:
            assert np.all(dense.imag == 0)


def test_disjoint_diagonal_and_offdiagonal_parts_commute():
    # a 1-sparse matrix never has diagonal and off-diagonal weight in the same
    # row, so the two parts have disjoint support and commute exactly
    from sihsim.hamiltonian import DiagonalEntry
    H = TimeDependentHamiltonian(
        n_qubits=2, d=1,
        entries=[MatrixEntry(0, 1, const(0.7), Coefficient())],
        diag=[DiagonalEntry(2, const(0.4)), DiagonalEntry(3, const(-1.1))])
    terms = one_sparse_terms(H, color_edges(H))
    assert [t.kind for t in terms] == [KIND_REAL_OFFDIAG, KIND_REAL_DIAG]
    combined_rows = [i for t in terms for pair in t.support for i in pair]
    assert len(set(combined_rows)) == len(combined_rows)
    a, b = terms[0].dense(0.0), terms[1].dense(0.0)
    assert np.array_equal(a @ b, b @ a)


def test_verify_partition_zero_deviation(rng):
    H = random_hamiltonian(rng, 3, 3)
    terms = one_sparse_terms(H, color_edges(H))
    rep = verify_partition(H, terms, 0.8)
    assert rep.max_entry_deviation == 0.0
    assert all(rep.one_sparse_flags)


def test_verify_partition_detects_dropped_term(rng):
    H = random_hamiltonian(rng, 3, 3)
    terms = one_sparse_terms(H, color_edges(H))
    dropped = terms[0]
    rep = verify_partition(H, terms[1:], 0.6)
    assert rep.max_entry_deviation == pytest.approx(
        float(np.max(np.abs(dropped.dense(0.6)))), abs=0)


def test_verify_partition_detects_perturbation():
    H = sigma_x_hamiltonian()
    terms = one_sparse_terms(H, color_edges(H))
    bumped = terms[0].__class__(dim=terms[0].dim, color=0, kind=terms[0].kind,
                                support=terms[0].support,
                                coeffs=(const(1.0 + 1e-9),))
    rep = verify_partition(H, [bumped], 0.0)
    assert rep.max_entry_deviation >= 1e-9
