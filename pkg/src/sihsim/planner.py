"""Compilation of an evolution into a segmented gadget schedule plus cost model.

The total error budget eps is split three ways, eps/3 each:
  * Trotter error, controlled by the step count r;
  * discretization error from rounding terms onto the self-inverse lattice,
    controlled by gamma = (eps/3) / (t * sqrt(d));
  * compression (Hamming-weight truncation) error, eps/3 spread uniformly
    over the segments as eps1 = (eps/3) / num_segments.

All order-constants from the asymptotic analysis default to 1 and are
configurable.  The plan-level gadget angle s is the uniform upper bound
2*gamma*dt on every realized per-gadget angle (each family weight is at most
2*gamma), which makes the per-segment failure budget m * p_fail(s) <= 1/4
hold for every executed segment.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gadget import ancilla_one_probability, fault_probability
from .hamiltonian import NormReport, TimeDependentHamiltonian
from .onesparse import color_edges, one_sparse_terms
from .selfinverse import rounded_data
from .tails import binomial_sf
from .walk import chernoff_cap

MATERIALIZE_LIMIT = 2_000_000  # max r*M for exact per-step family profiles


def choose_r(H: TimeDependentHamiltonian, t: float, eps: float, M: int, *,
             c_r: float = 1.0, norms: NormReport | None = None,
             samples: int = 257) -> int:
    """Trotter step count r = ceil(c_r * (M t)^2 (|H|^2 + |H'|) / (eps/3))."""
    if eps <= 0:
        raise ValueError("eps must be positive")
    norms = norms or H.norms(t, samples)
    strength = norms.spectral_norm_max**2 + norms.derivative_norm_max
    return max(1, math.ceil(c_r * (M * t) ** 2 * strength / (eps / 3.0)))


def choose_gamma(H: TimeDependentHamiltonian, t: float, eps: float,
                 d: int | None = None) -> float:
    """Lattice spacing target gamma = (eps/3) / (t * sqrt(d))."""
    if eps <= 0 or t <= 0:
        raise ValueError("eps and t must be positive")
    d = H.d if d is None else d
    return (eps / 3.0) / (t * math.sqrt(d))


def choose_k1(m: int, p1: float, eps1: float) -> int:
    """Minimal k with P[Binomial(m, p1) > k] <= eps1."""
    k = 0
    while k < m and binomial_sf(m, p1, k) > eps1:
        k += 1
    return k


@dataclass
class SegmentPlan:
    """Compiled schedule parameters for one (H, t, eps) pipeline run.

    When ``count_exact`` is set, ``step_sizes``/``step_weights`` hold the
    realized family length and equal weight for every (Trotter step, term)
    cell; otherwise only per-term caps estimated on a time grid are kept and
    ``gadget_count`` is an estimate (large sweeps never materialize).
    """

    hamiltonian: TimeDependentHamiltonian
    t: float
    eps: float
    c_r: float
    terms: list
    norms: NormReport
    M: int
    r: int
    dt: float
    gamma: float
    s: float
    p_fail: float
    p1: float
    m: int
    num_segments: int
    k1: int
    eps1: float
    gadget_count: int
    count_exact: bool
    step_sizes: np.ndarray | None = None
    step_weights: np.ndarray | None = None
    cap_step_sizes: np.ndarray | None = None
    trotter_bound: float = 0.0
    discretization_bound: float = 0.0
    truncation_budget: float = 0.0

    @property
    def budget_total(self) -> float:
        return self.trotter_bound + self.discretization_bound + self.truncation_budget

    def segment_bounds(self, seg: int):
        if not (0 <= seg < self.num_segments):
            raise IndexError(f"segment {seg} out of range")
        a = seg * self.m
        return a, min(a + self.m, self.gadget_count)

    def iter_gadgets(self, limit: int | None = None):
        """Yield (step, term_index, member, t0, s) descriptors in schedule order."""
        if not self.count_exact:
            raise ValueError("schedule was not materialized (plan too large)")
        emitted = 0
        for step in range(self.r):
            t0 = step * self.dt
            for ti in range(self.M):
                size = int(self.step_sizes[step, ti])
                s = float(self.step_weights[step, ti]) * self.dt
                for member in range(size):
                    yield step, ti, member, t0, s
                    emitted += 1
                    if limit is not None and emitted >= limit:
                        return

    def to_json_dict(self) -> dict:
        return {
            "t": self.t, "eps": self.eps, "c_r": self.c_r, "M": self.M,
            "r": self.r, "dt": self.dt, "gamma": self.gamma, "s": self.s,
            "p_fail": self.p_fail, "p1": self.p1, "m": self.m,
            "num_segments": self.num_segments, "k1": self.k1, "eps1": self.eps1,
            "gadget_count": self.gadget_count, "count_exact": self.count_exact,
            "trotter_bound": self.trotter_bound,
            "discretization_bound": self.discretization_bound,
            "truncation_budget": self.truncation_budget,
        }


def segment_plan(H: TimeDependentHamiltonian, t: float, eps: float, *,
                 c_r: float = 1.0, samples: int = 257,
                 materialize_limit: int = MATERIALIZE_LIMIT,
                 terms: list | None = None,
                 norms: NormReport | None = None) -> SegmentPlan:
    """Compile the full schedule for evolving H over [0, t] to accuracy eps."""
    if t <= 0:
        raise ValueError("t must be positive")
    if not (0.0 < eps < 1.0):
        raise ValueError("eps must lie in (0, 1)")
    norms = norms or H.norms(t, samples)
    if terms is None:
        terms = one_sparse_terms(H, color_edges(H))
    M = len(terms)
    r = choose_r(H, t, eps, max(M, 1), c_r=c_r, norms=norms)
    dt = t / r
    gamma = choose_gamma(H, t, eps)

    step_sizes = step_weights = cap_sizes = None
    if M == 0:
        count, exact = 0, True
        step_sizes = np.zeros((r, 0), dtype=np.int64)
        step_weights = np.zeros((r, 0), dtype=float)
    elif r * M <= materialize_limit:
        t0s = np.arange(r, dtype=float) * dt
        size_cols, weight_cols = [], []
        for term in terms:
            data = rounded_data(term, t0s, gamma)
            size_cols.append(data.size)
            weight_cols.append(data.weight)
        step_sizes = np.stack(size_cols, axis=1).astype(np.int64)
        step_weights = np.stack(weight_cols, axis=1)
        count = int(step_sizes.sum())
        exact = True
    else:
        grid = np.linspace(0.0, t, samples)
        caps = []
        for term in terms:
            g_max = float(np.max(np.abs(term.values(grid))))
            ell = math.ceil(g_max / (2.0 * gamma)) if g_max > 0 else 0
            caps.append(2 * ell)
        cap_sizes = np.array(caps, dtype=np.int64)
        count = int(r * cap_sizes.sum())
        exact = False

    s = 2.0 * gamma * dt
    if not (0.0 <= s < math.pi / 2):
        raise ValueError(f"plan gadget angle {s} out of range; eps budget too coarse")
    p_fail = fault_probability(s)
    p1 = ancilla_one_probability(s)
    m = max(1, int(math.floor(0.25 / p_fail))) if p_fail > 0 else max(1, count)
    num_segments = max(1, math.ceil(count / m))
    eps1 = (eps / 3.0) / num_segments
    k1 = choose_k1(m, p1, eps1)

    strength = norms.spectral_norm_max**2 + norms.derivative_norm_max
    trotter_bound = c_r * (max(M, 1) * t) ** 2 * strength / r
    return SegmentPlan(
        hamiltonian=H, t=t, eps=eps, c_r=c_r, terms=terms, norms=norms,
        M=M, r=r, dt=dt, gamma=gamma, s=s, p_fail=p_fail, p1=p1, m=m,
        num_segments=num_segments, k1=k1, eps1=eps1,
        gadget_count=count, count_exact=exact,
        step_sizes=step_sizes, step_weights=step_weights, cap_step_sizes=cap_sizes,
        trotter_bound=trotter_bound,
        discretization_bound=math.sqrt(H.d) * gamma * t,
        truncation_budget=num_segments * eps1,
    )


@dataclass(frozen=True)
class ResourceEstimate:
    """Cost-model values (model units, order constants set to 1)."""

    k0: int
    eps0: float
    k1: int
    T: int
    lam: int
    N: int
    queries_total: int
    gates_model: int
    tau: float
    tau_prime: float

    def to_json_dict(self) -> dict:
        return {
            "k0": self.k0, "eps0": self.eps0, "k1": self.k1, "T": self.T,
            "lambda": self.lam, "N": self.N, "queries_total": self.queries_total,
            "gates_model": self.gates_model, "tau": self.tau,
            "tau_prime": self.tau_prime,
        }


def resource_estimate(plan: SegmentPlan, eps: float | None = None,
                      T: int | None = None) -> ResourceEstimate:
    """Cost model for a plan: capped queries N*k1 and the gate-count formula."""
    eps = plan.eps if eps is None else eps
    T = plan.num_segments if T is None else T
    lam, cap = chernoff_cap(T, eps)
    h_max = plan.norms.entry_norm_max
    denom = plan.m * plan.t * max(plan.M, 1) * h_max
    eps0 = eps / denom if denom > 0 else eps
    k0 = max(1, math.ceil(math.log2(1.0 / eps0))) if eps0 < 1.0 else 1
    log_m = math.log2(plan.m) if plan.m > 1 else 0.0
    l0 = math.log2(1.0 / eps0) if eps0 < 1.0 else 1.0
    inner = math.log2(l0) if l0 > 1.0 else 0.0
    gates = math.ceil(plan.t * max(plan.M, 1) * h_max * k0 * (log_m**2 + log_m * inner))
    return ResourceEstimate(
        k0=k0, eps0=eps0, k1=plan.k1, T=T, lam=lam, N=cap,
        queries_total=cap * plan.k1, gates_model=int(gates),
        tau=plan.norms.spectral_norm_max * plan.t,
        tau_prime=plan.norms.derivative_norm_max * plan.t,
    )
