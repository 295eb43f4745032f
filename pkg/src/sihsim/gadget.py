"""One-ancilla probabilistic implementation of exp(-i*U*s) for involutions U.

The circuit is: ancilla |0>, apply R, apply P = diag(1, -i), apply U on the
system controlled on the ancilla being |1>, apply R again, measure the
ancilla.  Working out the algebra for a self-inverse U:

    outcome b=0: applies exp(-i*U*s) = cos(s)*I - i*sin(s)*U,
                 with probability 1/(cos s + sin s)^2 for any input state;
    outcome b=1: applies the fault F = (I + i*U)/sqrt(2) = exp(i*U*pi/4),
                 with probability 2*cos(s)*sin(s)/(cos s + sin s)^2.

F squares to i*U = exp(i*U*pi/2), which is the natural way to attribute a
half-pi rotation to a fault; the per-branch operator itself is the quarter-pi
rotation above, and both are verified against the literal circuit in tests.
The correction F^{-1} = exp(-i*U*pi/4) is exact and costs two applications of
U (two oracle queries).
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .selfinverse import SelfInverseTerm
from .tails import binomial_pmf_vector, binomial_sf


def _check_angle(s: float):
    if not (0.0 <= s < math.pi / 2):
        raise ValueError(f"gadget angle s must lie in [0, pi/2), got {s}")


def gadget_matrices(s: float):
    """The single-qubit gates (R, P); R is a normalized involution."""
    _check_angle(s)
    c, sn = math.cos(s), math.sin(s)
    nu = math.sqrt(c + sn)
    R = np.array([[math.sqrt(c), math.sqrt(sn)],
                  [math.sqrt(sn), -math.sqrt(c)]], dtype=np.complex128) / nu
    P = np.array([[1.0, 0.0], [0.0, -1.0j]], dtype=np.complex128)
    return R, P


def success_probability(s: float) -> float:
    """Probability of the b=0 outcome; independent of the input state and of U."""
    _check_angle(s)
    return 1.0 / (math.cos(s) + math.sin(s)) ** 2


def fault_probability(s: float) -> float:
    # algebraically 1 - success_probability(s); this form has no cancellation
    # for tiny s, where the failure probability is ~2s
    _check_angle(s)
    c, sn = math.cos(s), math.sin(s)
    return 2.0 * c * sn / (c + sn) ** 2


def ancilla_one_probability(s: float) -> float:
    """Weight of |1> in the prepared ancilla state R P |0>; drives compression."""
    _check_angle(s)
    return math.sin(s) / (math.cos(s) + math.sin(s))


def _as_dense(U) -> np.ndarray:
    if isinstance(U, SelfInverseTerm):
        return U.dense()
    return np.asarray(U, dtype=np.complex128)


def intended_operator(U, s: float) -> np.ndarray:
    """exp(-i*U*s) for self-inverse U, in closed form."""
    _check_angle(s)
    ud = _as_dense(U)
    return math.cos(s) * np.eye(ud.shape[0]) - 1j * math.sin(s) * ud


@dataclass(frozen=True)
class FaultOperator:
    """The b=1 branch operator and its exact two-query correction."""

    matrix: np.ndarray
    correction: np.ndarray
    correction_queries: int = 2


def fault_operator(U) -> FaultOperator:
    ud = _as_dense(U)
    eye = np.eye(ud.shape[0], dtype=np.complex128)
    f = (eye + 1j * ud) / math.sqrt(2.0)
    return FaultOperator(matrix=f, correction=f.conj().T.copy())


@dataclass(frozen=True)
class GadgetOutcome:
    b: int
    post_state: np.ndarray
    branch_probability: float
    applied_operator_tag: str


@dataclass(frozen=True)
class FaultRecord:
    segment_index: int
    gadget_index: int
    term: object
    correction_queries: int = 2


def apply_gadget(state: np.ndarray, U, s: float, mode: str = "postselect",
                 rng=None, postselect_bit: int = 0) -> GadgetOutcome:
    """Run the literal five-stage gadget circuit on a statevector.

    ``mode='postselect'`` returns the ``postselect_bit`` branch (default b=0);
    ``mode='sample'`` draws the outcome by the Born rule using ``rng``.
    """
    _check_angle(s)
    state = np.asarray(state, dtype=np.complex128)
    norm = np.linalg.norm(state)
    if abs(norm - 1.0) > 1e-10:
        raise ValueError(f"input state is not normalized (|norm-1| = {abs(norm - 1.0):.3e})")
    if mode not in ("postselect", "sample"):
        raise ValueError(f"unknown mode {mode!r}")

    R, P = gadget_matrices(s)
    joint = np.zeros((2, state.shape[0]), dtype=np.complex128)
    joint[0] = state
    joint = R @ joint                     # R on the ancilla
    joint = P @ joint                     # P on the ancilla
    if isinstance(U, SelfInverseTerm):    # controlled-U on the system
        joint[1] = U.matvec(joint[1])
    else:
        joint[1] = _as_dense(U) @ joint[1]
    joint = R @ joint                     # final R

    probs = np.array([np.vdot(joint[0], joint[0]).real,
                      np.vdot(joint[1], joint[1]).real])
    if mode == "postselect":
        if postselect_bit not in (0, 1):
            raise ValueError("postselect_bit must be 0 or 1")
        b = postselect_bit
    else:
        if rng is None:
            raise ValueError("mode='sample' requires an rng")
        b = int(rng.random() >= probs[0])
    branch = joint[b]
    bnorm = np.linalg.norm(branch)
    post = branch / bnorm if bnorm > 0 else branch
    return GadgetOutcome(b=b, post_state=post, branch_probability=float(probs[b]),
                         applied_operator_tag="intended" if b == 0 else "fault")


@dataclass(frozen=True)
class WeightDistribution:
    """Hamming-weight distribution of a segment's ancilla register."""

    m: int
    p1: float
    probabilities: np.ndarray

    def truncation_error(self, k: int) -> float:
        """Upper-tail mass beyond Hamming weight k."""
        return binomial_sf(self.m, self.p1, k)

    def min_weight_within(self, eps1: float) -> int:
        k = 0
        while self.truncation_error(k) > eps1 and k < self.m:
            k += 1
        return k


def segment_weight_distribution(m: int, s: float) -> WeightDistribution:
    """Binomial(m, p1) ancilla-weight distribution for m gadgets at angle s."""
    if m < 1:
        raise ValueError("m must be >= 1")
    p1 = ancilla_one_probability(s)
    probs = binomial_pmf_vector(m, p1)
    return WeightDistribution(m=m, p1=p1, probabilities=probs)
