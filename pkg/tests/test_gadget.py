import itertools
import math

import numpy as np
import pytest

from sihsim import gadget as gd
from sihsim.reference import state_distance
from sihsim.selfinverse import SelfInverseTerm, decompose
from sihsim.tails import binomial_sf_exact

from conftest import ALL_KINDS, random_one_sparse_term

SIGMA_X = SelfInverseTerm(perm=np.array([1, 0]), phase_code=np.zeros(2, dtype=np.int8))


def _random_term(rng):
    kind = ALL_KINDS[int(rng.integers(0, 3))]
    term = random_one_sparse_term(rng, int(rng.integers(1, 4)), kind)
    fam = decompose(term, 0.0, 0.5)
    return fam.terms[int(rng.integers(0, len(fam)))]


def _random_state(rng, dim):
    psi = rng.normal(size=dim) + 1j * rng.normal(size=dim)
    return psi / np.linalg.norm(psi)


def test_gadget_matrices_at_zero():
    R, P = gd.gadget_matrices(0.0)
    assert np.array_equal(R, np.array([[1, 0], [0, -1]], dtype=complex))
    assert np.array_equal(P, np.diag([1, -1j]))


def test_r_is_unitary_and_involution():
    for s in np.linspace(0.0, math.pi / 2 * 0.999, 25):
        R, _ = gd.gadget_matrices(float(s))
        assert np.max(np.abs(R.conj().T @ R - np.eye(2))) < 1e-14
        assert np.max(np.abs(R @ R - np.eye(2))) < 1e-14


def test_angle_domain_enforced():
    with pytest.raises(ValueError):
        gd.gadget_matrices(math.pi / 2)
    with pytest.raises(ValueError):
        gd.gadget_matrices(-0.1)


def test_success_probability_half_at_pi_over_four(rng):
    s = math.pi / 4
    psi = _random_state(rng, 2)
    out = gd.apply_gadget(psi, SIGMA_X, s)
    assert out.branch_probability == pytest.approx(0.5, abs=1e-12)
    assert gd.success_probability(s) == pytest.approx(0.5, abs=1e-15)


def test_small_angle_probability_two_ways():
    s = 0.01
    circuit = gd.apply_gadget(np.array([1.0, 0.0], dtype=complex), SIGMA_X, s)
    formula = 1.0 / (math.cos(s) + math.sin(s)) ** 2
    assert abs(circuit.branch_probability - formula) < 1e-12


def test_s_zero_succeeds_with_state_unchanged():
    psi = np.array([0.6, 0.8], dtype=complex)
    out = gd.apply_gadget(psi, SIGMA_X, 0.0)
    assert out.b == 0
    assert out.branch_probability == pytest.approx(1.0, abs=1e-14)
    assert state_distance(out.post_state, psi) < 1e-14


def test_unnormalized_input_rejected():
    with pytest.raises(ValueError, match="normalized"):
        gd.apply_gadget(np.array([1.0, 1.0], dtype=complex), SIGMA_X, 0.1)


def test_branch_identity_random(rng):
    for _ in range(100):
        u = _random_term(rng)
        s = float(rng.uniform(1e-5, math.pi / 4))
        psi = _random_state(rng, u.dim)
        out = gd.apply_gadget(psi, u, s)
        expect = gd.intended_operator(u, s) @ psi
        assert state_distance(out.post_state, expect) <= 1e-12
        assert abs(out.branch_probability - gd.success_probability(s)) <= 1e-12


def test_success_probability_state_and_term_independent(rng):
    s = 0.37
    probs = []
    for _ in range(20):
        u = _random_term(rng)
        probs.append(gd.apply_gadget(_random_state(rng, u.dim), u, s).branch_probability)
    assert max(probs) - min(probs) < 1e-12


def test_fault_branch_on_sigma_x():
    psi = np.array([1.0, 0.0], dtype=complex)
    out = gd.apply_gadget(psi, SIGMA_X, 0.3, mode="postselect", postselect_bit=1)
    expect = np.array([1.0, 1.0j]) / math.sqrt(2.0)
    assert state_distance(out.post_state, expect) < 1e-12
    assert out.applied_operator_tag == "fault"


def test_fault_operator_identity_like_term_is_global_phase():
    dplus = SelfInverseTerm(perm=np.arange(2), phase_code=np.zeros(2, dtype=np.int8))
    fop = gd.fault_operator(dplus)
    assert np.max(np.abs(fop.matrix - np.exp(1j * math.pi / 4) * np.eye(2))) < 1e-15
    assert fop.correction_queries == 2


def test_fault_then_correction_is_identity(rng):
    for _ in range(100):
        u = _random_term(rng)
        psi = _random_state(rng, u.dim)
        fop = gd.fault_operator(u)
        assert state_distance(fop.correction @ (fop.matrix @ psi), psi) <= 1e-12


def test_fault_squared_is_i_times_term(rng):
    for _ in range(20):
        u = _random_term(rng)
        f = gd.fault_operator(u).matrix
        assert np.max(np.abs(f @ f - 1j * u.dense())) < 1e-14


def test_fault_matches_circuit_branch(rng):
    for _ in range(20):
        u = _random_term(rng)
        s = float(rng.uniform(1e-3, math.pi / 4))
        psi = _random_state(rng, u.dim)
        out = gd.apply_gadget(psi, u, s, postselect_bit=1)
        expect = gd.fault_operator(u).matrix @ psi
        assert state_distance(out.post_state, expect) <= 1e-12


def test_sampled_outcomes_follow_born_rule(rng):
    s = math.pi / 4
    psi = np.array([1.0, 0.0], dtype=complex)
    hits = sum(gd.apply_gadget(psi, SIGMA_X, s, mode="sample", rng=rng).b
               for _ in range(4000))
    assert abs(hits / 4000 - 0.5) < 0.05


def test_weight_distribution_s_zero():
    dist = gd.segment_weight_distribution(5, 0.0)
    assert dist.probabilities[0] == pytest.approx(1.0, abs=1e-15)
    assert dist.truncation_error(0) == 0.0


def test_weight_distribution_symmetric_binomial():
    dist = gd.segment_weight_distribution(4, math.pi / 4)
    assert dist.p1 == pytest.approx(0.5, abs=1e-15)
    assert np.allclose(dist.probabilities, np.array([1, 4, 6, 4, 1]) / 16.0, atol=1e-14)


def test_weight_distribution_tail_large_m():
    # m * p1 = 1/8 regime: tail beyond 5 is below 1e-9 (exact rational oracle)
    from fractions import Fraction
    m = 1000
    p1 = Fraction(1, 8 * m)
    exact = binomial_sf_exact(m, p1, 5)
    assert exact < Fraction(1, 10**9)
    s = math.atan2(1.0 / 8000.0, 1.0 - 1.0 / 8000.0)  # sin/(cos+sin) ~ 1/8000
    dist = gd.segment_weight_distribution(m, s)
    assert dist.truncation_error(5) < 1e-9


def _apply_one_qubit(psi, mat, axis):
    psi = np.moveaxis(psi, axis, 0)
    out = np.tensordot(mat, psi, axes=(1, 0))
    return np.moveaxis(out, 0, axis)


def test_deferred_measurement_equivalence(rng):
    """Joint simulation (all ancillas measured at the end) agrees with the
    sequential measure-and-continue execution, branch by branch."""
    m = 3
    terms = [_random_term(rng) for _ in range(m)]
    dim = max(t.dim for t in terms)
    terms = [t for t in terms if t.dim == dim] or [SIGMA_X] * m
    while len(terms) < m:
        terms.append(terms[0])
    s = 0.4
    psi0 = _random_state(rng, dim)
    R, P = gd.gadget_matrices(s)

    joint = np.zeros((2,) * m + (dim,), dtype=complex)
    joint[(0,) * m] = psi0
    for k in range(m):
        joint = _apply_one_qubit(joint, R, k)
        joint = _apply_one_qubit(joint, P, k)
        moved = np.moveaxis(joint, k, 0)
        moved[1] = np.tensordot(moved[1], terms[k].dense(), axes=([-1], [1]))
        joint = np.moveaxis(moved, 0, k)
        joint = _apply_one_qubit(joint, R, k)

    for bits in itertools.product((0, 1), repeat=m):
        amp = joint[bits]
        p_joint = float(np.vdot(amp, amp).real)
        state = psi0
        p_seq = 1.0
        for k, b in enumerate(bits):
            out = gd.apply_gadget(state, terms[k], s, postselect_bit=b)
            state = out.post_state
            p_seq *= out.branch_probability
        assert abs(p_joint - p_seq) < 1e-12
        if p_joint > 1e-9:
            assert state_distance(amp / np.linalg.norm(amp), state) < 1e-12
