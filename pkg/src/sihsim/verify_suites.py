"""Named self-check suites behind the ``verify`` CLI subcommand.

Each suite runs a batch of invariant checks and returns (name, ok, detail)
rows; suites are deterministic (fixed seeds) and desk-scale fast.
"""

from __future__ import annotations

import math

import numpy as np

from . import gadget as gd
from . import walk as wk
from .hamiltonian import TimeDependentHamiltonian
from .onesparse import (KIND_IMAG_OFFDIAG, KIND_REAL_DIAG, KIND_REAL_OFFDIAG,
                        OneSparseTerm, color_edges, one_sparse_terms, verify_partition)
from .reference import state_distance
from .selfinverse import decompose, verify_family

_KINDS = (KIND_REAL_OFFDIAG, KIND_REAL_DIAG, KIND_IMAG_OFFDIAG)


def random_one_sparse_term(rng: np.random.Generator, n_qubits: int, kind: str,
                           scale: float = 1.0) -> OneSparseTerm:
    """Random 1-sparse term with constant coefficients (synthetic parent)."""
    from .hamiltonian import Coefficient

    dim = 1 << n_qubits
    indices = rng.permutation(dim)
    if kind == KIND_REAL_DIAG:
        count = int(rng.integers(1, dim + 1))
        support = tuple((int(i),) for i in sorted(indices[:count]))
    else:
        count = int(rng.integers(1, dim // 2 + 1))
        pairs = [tuple(sorted((int(indices[2 * i]), int(indices[2 * i + 1]))))
                 for i in range(count)]
        support = tuple(sorted(pairs))
    coeffs = tuple(Coefficient(constant=float(rng.uniform(-scale, scale)))
                   for _ in support)
    return OneSparseTerm(dim=dim, color=0, kind=kind, support=support, coeffs=coeffs)


def suite_lemma1(parents: int = 60, seed: int = 7) -> list:
    rng = np.random.Generator(np.random.PCG64(seed))
    worst_err = 0.0
    ok = True
    for i in range(parents):
        kind = _KINDS[i % 3]
        term = random_one_sparse_term(rng, int(rng.integers(1, 5)), kind)
        for gamma in (0.5, 0.1, 0.02):
            fam = decompose(term, 0.0, gamma)
            rep = verify_family(term, 0.0, fam)
            bound = min(gamma, fam.g / (2 * fam.ell)) if fam.ell else 0.0
            ok &= rep.max_norm_error <= bound + 1e-15
            ok &= rep.max_commutator_norm == 0.0
            ok &= rep.max_involution_defect == 0.0
            ok &= rep.size_ok
            worst_err = max(worst_err, rep.max_norm_error)
    return [("lemma1-random-families", ok, f"{parents} parents x 3 gammas, worst error {worst_err:.3e}")]


def suite_example() -> list:
    from .hamiltonian import Coefficient, MatrixEntry

    one = Coefficient(constant=1.0)
    half = Coefficient(constant=0.5)
    zero = Coefficient()
    H = TimeDependentHamiltonian(
        n_qubits=2, d=1,
        entries=[MatrixEntry(0, 1, one, zero), MatrixEntry(2, 3, half, zero)],
        diag=[])
    term = one_sparse_terms(H, color_edges(H))[0]
    fam = decompose(term, 0.0, 0.25)
    g_full = np.zeros((4, 4))
    g_full[0, 1] = g_full[1, 0] = g_full[2, 3] = g_full[3, 2] = 1.0
    g_plus = np.zeros((4, 4))
    g_plus[0, 1] = g_plus[1, 0] = 1.0
    g_plus[2, 2] = g_plus[3, 3] = 1.0
    g_minus = g_plus.copy()
    g_minus[2, 2] = g_minus[3, 3] = -1.0
    expected = [g_full, g_full, g_plus, g_minus]
    ok = (fam.ell == 2 and len(fam) == 4 and fam.weight == 0.25
          and all(np.array_equal(u.dense().real, e) and np.all(u.dense().imag == 0)
                  for u, e in zip(fam.terms, expected)))
    recon_ok = bool(np.array_equal(fam.reconstruct_dense(), H.dense(0.0)))
    return [("worked-example-family", ok, "ell=2 split reproduces the printed pair"),
            ("worked-example-reconstruction", recon_ok, "zero rounding error on the 4x4 example")]


def suite_gadget(cases: int = 40, seed: int = 11) -> list:
    rng = np.random.Generator(np.random.PCG64(seed))
    ok_branch = ok_prob = ok_fault = True
    for i in range(cases):
        kind = _KINDS[i % 3]
        term = random_one_sparse_term(rng, int(rng.integers(1, 4)), kind)
        fam = decompose(term, 0.0, 0.5)
        if not fam.terms:
            continue
        u = fam.terms[int(rng.integers(0, len(fam)))]
        s = float(rng.uniform(1e-4, math.pi / 4))
        psi = rng.normal(size=u.dim) + 1j * rng.normal(size=u.dim)
        psi /= np.linalg.norm(psi)
        out = gd.apply_gadget(psi, u, s, mode="postselect")
        expect = gd.intended_operator(u, s) @ psi
        ok_branch &= state_distance(out.post_state, expect) <= 1e-12
        ok_prob &= abs(out.branch_probability - gd.success_probability(s)) <= 1e-12
        fop = gd.fault_operator(u)
        restored = fop.correction @ (fop.matrix @ psi)
        ok_fault &= state_distance(restored, psi) <= 1e-12
    return [("gadget-postselected-branch", ok_branch, "b=0 branch equals exp(-iUs)"),
            ("gadget-success-probability", ok_prob, "(cos s + sin s)^-2, state independent"),
            ("gadget-fault-correction", ok_fault, "fault then correction is the identity")]


def suite_partition(instances: int = 10, seed: int = 3) -> list:
    from .hamiltonian import Coefficient, DiagonalEntry, MatrixEntry

    rng = np.random.Generator(np.random.PCG64(seed))
    ok = True
    for _ in range(instances):
        n = int(rng.integers(1, 5))
        d = int(rng.integers(1, 5))
        dim = 1 << n
        counts = {}
        entries, diag = [], []
        for _ in range(3 * dim):
            a, b = sorted(rng.integers(0, dim, size=2).tolist())
            if a == b or counts.get(a, 0) >= d or counts.get(b, 0) >= d:
                continue
            if any(e.row == a and e.col == b for e in entries):
                continue
            entries.append(MatrixEntry(a, b,
                                       Coefficient(constant=float(rng.normal())),
                                       Coefficient(constant=float(rng.normal()))))
            counts[a] = counts.get(a, 0) + 1
            counts[b] = counts.get(b, 0) + 1
        for q in range(dim):
            if counts.get(q, 0) < d and rng.random() < 0.4:
                diag.append(DiagonalEntry(q, Coefficient(constant=float(rng.normal()))))
                counts[q] = counts.get(q, 0) + 1
        if not entries and not diag:
            continue
        H = TimeDependentHamiltonian(n_qubits=n, d=d, entries=entries, diag=diag)
        terms = one_sparse_terms(H, color_edges(H))
        for tp in rng.uniform(0, 2, size=5):
            rep = verify_partition(H, terms, float(tp))
            ok &= rep.max_entry_deviation == 0.0 and all(rep.one_sparse_flags)
    return [("partition-exactness", ok, f"{instances} random instances, exact entrywise sums")]


def suite_appendix() -> list:
    rows = []
    bound_ok = all(wk.fault_pmf_bound_holds(m, f)
                   for m in (2, 10, 35) for f in range(0, m + 1))
    rows.append(("fault-pmf-bound", bound_ok, "q(f) <= closed bound, exact arithmetic"))
    beta_ok = all(wk.mgf_beta(m) < 0.25 for m in (35, 100, 1000, 10_000))
    rows.append(("mgf-beta", beta_ok, "beta < 1/4 for m in {35, 100, 1000, 10000}"))
    val = wk.cap_bound(1, 24)
    rows.append(("chernoff-cap-value", abs(val - math.exp(-576.0 / 624.0)) < 1e-12,
                 f"cap bound at (T=1, lambda=24) = {val:.12f}"))
    params = wk.WalkParameters.build(T=20, m=50, eps=1e-2)
    res = wk.monte_carlo_walk(params, trials=2000, seed=5)
    rows.append(("walk-monte-carlo", res.exceedance_rate <= 1e-2 and res.q_identity_holds(),
                 f"exceedance {res.exceedance_rate:.4f} <= eps, Q identity holds"))
    return rows


SUITES = {
    "lemma1": suite_lemma1,
    "example": suite_example,
    "gadget": suite_gadget,
    "partition": suite_partition,
    "appendix": suite_appendix,
}


def run_suite(name: str) -> list:
    if name == "all":
        rows = []
        for fn in SUITES.values():
            rows.extend(fn())
        return rows
    if name not in SUITES:
        raise ValueError(f"unknown suite {name!r}; choose from {sorted(SUITES)} or 'all'")
    return SUITES[name]()
