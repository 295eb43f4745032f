"""Concentration-bound analysis of the segmented attempt walk, plus Monte Carlo.

Completing T segments is a biased random walk: an attempt with zero faults is
a forward step, a faulty attempt is a backward step that must itself be undone.
This module provides the analytic side (the Chernoff cap on total attempts,
the per-attempt fault pmf and its closed bound, and the moment-generating-
function bound on correction cost) and a Monte Carlo sampler of the stylized
walk model (every attempt has m gadgets, each failing with probability
p_fail = 1/(4m)) to validate the bounds empirically.

The sampler's inner loop runs in a compiled extension when available and in a
pure-Python fallback otherwise; both consume identical pre-drawn uniforms and
produce bit-identical traces.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import mpmath
import numpy as np
from scipy import stats

from . import _walk_py

try:
    from . import _walkcore as _compiled
except ImportError:  # extension not built; fall back to pure Python
    _compiled = None

HAS_COMPILED_KERNEL = _compiled is not None


# ---------------------------------------------------------------------------
# A1: cap on the number of segment attempts
# ---------------------------------------------------------------------------

def cap_bound(T: int, lam: float) -> float:
    """Failure-probability bound exp(-lam^2 / (24*(2T + lam))) at cap N = 2T+lam."""
    if lam <= 0:
        return 1.0
    return math.exp(-lam * lam / (24.0 * (2.0 * T + lam)))


def chernoff_cap(T: int, eps: float):
    """Smallest integer slack lam with cap_bound(T, lam) <= eps; N = 2T + lam."""
    if T < 1:
        raise ValueError("T must be >= 1")
    if eps <= 0.0:
        raise ValueError("eps must be positive")
    if eps >= 1.0:
        return 0, 2 * T
    L = math.log(1.0 / eps)
    lam = int(math.ceil(12.0 * L + math.sqrt(144.0 * L * L + 48.0 * L * T)))
    while lam > 0 and cap_bound(T, lam - 1) <= eps:
        lam -= 1
    while cap_bound(T, lam) > eps:
        lam += 1
    return lam, 2 * T + lam


# ---------------------------------------------------------------------------
# A2: fault pmf, its closed bound, and the MGF cost bound
# ---------------------------------------------------------------------------

def fault_pmf(m: int, f: int) -> float:
    """q(f) = P(f faults in an attempt of m gadgets at p = 1/(4m))."""
    if m < 1:
        raise ValueError("m must be >= 1")
    if not (0 <= f <= m):
        raise ValueError(f"f must lie in 0..{m}")
    return float(stats.binom.pmf(f, m, 1.0 / (4.0 * m)))


def fault_pmf_exact(m: int, f: int) -> Fraction:
    if m < 1:
        raise ValueError("m must be >= 1")
    if not (0 <= f <= m):
        raise ValueError(f"f must lie in 0..{m}")
    p = Fraction(1, 4 * m)
    return Fraction(math.comb(m, f)) * p**f * (1 - p) ** (m - f)


def fault_pmf_bound(m: int, f: int) -> float:
    """Closed upper bound e^{-1/4} (1/f!) (1/(4 - 1/m))^f on q(f)."""
    return math.exp(-0.25) / math.factorial(f) * (1.0 / (4.0 - 1.0 / m)) ** f


def fault_pmf_bound_holds(m: int, f: int, dps: int = 60) -> bool:
    """Certify q(f) <= bound with exact q and high-precision bound arithmetic."""
    q = fault_pmf_exact(m, f)
    with mpmath.workdps(dps):
        q_mp = mpmath.mpf(q.numerator) / mpmath.mpf(q.denominator)
        bound = mpmath.e ** mpmath.mpf("-0.25") / mpmath.factorial(f) \
            * (1 / (4 - mpmath.mpf(1) / m)) ** f
        return bool(q_mp <= bound)


def mgf_beta(m: int, dps: int = 40) -> float:
    """beta = sum_{f>=1} q(f) e^{f/10}, via the exact binomial MGF closed form."""
    with mpmath.workdps(dps):
        p = mpmath.mpf(1) / (4 * m)
        full = (1 - p + p * mpmath.e ** mpmath.mpf("0.1")) ** m
        return float(full - (1 - p) ** m)


@dataclass(frozen=True)
class CostBoundParams:
    """Constants in the correction-cost MGF bound g(t) <= 1/x + alpha*t."""

    m: int
    beta: float
    alpha: float
    q0: float
    n_M: int
    x: float
    t_mgf: float
    lambda_cost: float
    bound_on_lambda_T: float


def mgf_bound_params(m: int, T: int, eps: float) -> CostBoundParams:
    """Evaluate the cost-bound constants; valid only in the proved regime m >= 35."""
    if m < 35:
        raise ValueError("MGF cost bound requires m >= 35")
    if not (0.0 < eps < T):
        raise ValueError("need 0 < eps < T for the conditioning factor x")
    beta = mgf_beta(m)
    if not beta < 0.25:
        raise ValueError(f"beta = {beta} >= 1/4; outside the proved regime")
    q0 = (1.0 - 1.0 / (4.0 * m)) ** m
    denom = 1.0 - 4.0 * q0 * beta
    if denom <= 0.0:
        raise ValueError("4*q0*beta >= 1; the geometric series does not converge")
    alpha = 16.0 * q0 * q0 / denom**3
    _, n1 = chernoff_cap(1, eps / T)
    n_m = math.ceil((n1 - 1) / 2)
    x = 1.0 / (1.0 - eps / T)
    t_mgf = 1.0 / (40.0 * n_m)
    lambda_cost = math.log(1.0 / eps) / (t_mgf * T) + x * alpha
    return CostBoundParams(m=m, beta=beta, alpha=alpha, q0=q0, n_M=n_m, x=x,
                           t_mgf=t_mgf, lambda_cost=lambda_cost,
                           bound_on_lambda_T=lambda_cost * T)


# ---------------------------------------------------------------------------
# Monte Carlo of the stylized walk
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class WalkParameters:
    """Inputs and derived caps for the stylized segment walk."""

    T: int
    m: int
    p_fail: float
    eps: float
    lam: int
    N: int
    n_M: int
    x: float

    @classmethod
    def build(cls, T: int, m: int, eps: float, p_fail: float | None = None) -> "WalkParameters":
        if T < 1 or m < 1:
            raise ValueError("T and m must be >= 1")
        if not (0.0 < eps < 1.0):
            raise ValueError("eps must lie in (0, 1)")
        if p_fail is None:
            p_fail = 1.0 / (4.0 * m)
        if not (0.0 <= p_fail < 1.0):
            raise ValueError("p_fail must lie in [0, 1)")
        lam, cap = chernoff_cap(T, eps)
        _, n1 = chernoff_cap(1, eps / T)
        n_m = math.ceil((n1 - 1) / 2)
        return cls(T=T, m=m, p_fail=p_fail, eps=eps, lam=lam, N=cap, n_M=n_m,
                   x=1.0 / (1.0 - eps / T))

    @property
    def q0(self) -> float:
        return (1.0 - self.p_fail) ** self.m

    @property
    def log2_m_ceil(self) -> int:
        return max(0, (self.m - 1).bit_length())


def _conditional_fault_cdf(m: int, p_fail: float) -> np.ndarray:
    """CDF of the fault count conditioned on >= 1 fault; last bucket absorbs."""
    if p_fail == 0.0:
        return np.array([1.0])
    q0 = (1.0 - p_fail) ** m
    k = np.arange(1, m + 1)
    pmf = stats.binom.pmf(k, m, p_fail) / (1.0 - q0)
    cdf = np.cumsum(pmf)
    cut = int(np.searchsorted(cdf, 1.0 - 1e-15)) + 1
    cdf = cdf[:min(cut, m)].copy()
    cdf[-1] = 1.0
    return cdf


def _resolve_backend(name: str):
    if name == "auto":
        return _compiled if _compiled is not None else _walk_py
    if name == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled walk kernel is not available")
        return _compiled
    if name == "python":
        return _walk_py
    raise ValueError(f"unknown backend {name!r}")


@dataclass
class WalkResult:
    """Per-trial and per-segment records of a Monte Carlo walk run."""

    params: WalkParameters
    trials: int
    seed: int
    backend: str
    attempts: np.ndarray
    completed: np.ndarray
    q_total: np.ndarray
    steps: np.ndarray
    faults: np.ndarray
    seg_counts: np.ndarray
    seg_n: np.ndarray
    seg_e: np.ndarray

    @property
    def exceedance_rate(self) -> float:
        return 1.0 - float(np.mean(self.completed))

    @property
    def mean_attempts(self) -> float:
        return float(np.mean(self.attempts))

    def _segment_masks(self):
        cols = np.arange(self.params.T)[None, :]
        complete_cols = self.seg_counts - (1 - self.completed.astype(np.int64))
        return cols < complete_cols[:, None]

    def segment_q(self) -> np.ndarray:
        q = 2 * (2 * self.seg_n.astype(np.int64) - 1) * self.seg_e
        return np.where(self.seg_n > 0, q, 0)

    def q_identity_holds(self) -> bool:
        """Per-trial Q equals the sum over recorded segments of 2(2n-1)E."""
        cols = np.arange(self.params.T)[None, :]
        recorded = cols < self.seg_counts[:, None]
        q = np.where(recorded, self.segment_q(), 0).sum(axis=1)
        return bool(np.array_equal(q, self.q_total))

    def mgf_estimate(self, t: float):
        """Mean and standard error of e^{t*Q} over completed segments with n <= n_M."""
        include = self._segment_masks() & (self.seg_n <= self.params.n_M)
        vals = np.exp(t * self.segment_q()[include].astype(float))
        if vals.size == 0:
            return float("nan"), float("nan"), 0
        mean = float(np.mean(vals))
        se = float(np.std(vals, ddof=1) / math.sqrt(vals.size)) if vals.size > 1 else float("inf")
        return mean, se, int(vals.size)

    def nm_exceed_segments(self) -> int:
        include = self._segment_masks() & (self.seg_n > self.params.n_M)
        return int(np.sum(include))

    def total_recursive_steps(self) -> int:
        return int(np.sum(self.steps))

    def summary(self) -> dict:
        p = self.params
        try:
            cb = mgf_bound_params(p.m, p.T, p.eps)
            mgf_mean, mgf_se, mgf_count = self.mgf_estimate(cb.t_mgf)
            mgf = {"t": cb.t_mgf, "mean": mgf_mean, "stderr": mgf_se,
                   "segments": mgf_count, "bound": 1.0 + cb.x * cb.alpha * cb.t_mgf,
                   "alpha": cb.alpha, "beta": cb.beta}
        except ValueError:
            mgf = None
        return {
            "T": p.T, "m": p.m, "p_fail": p.p_fail, "eps": p.eps,
            "lambda": p.lam, "N": p.N, "n_M": p.n_M, "x": p.x,
            "cap_bound": cap_bound(p.T, p.lam),
            "trials": self.trials, "seed": self.seed, "backend": self.backend,
            "exceedance_rate": self.exceedance_rate,
            "mean_attempts": self.mean_attempts,
            "mean_q": float(np.mean(self.q_total)),
            "total_recursive_steps": self.total_recursive_steps(),
            "nm_exceed_segments": self.nm_exceed_segments(),
            "mgf": mgf,
        }


def monte_carlo_walk(params: WalkParameters, trials: int, seed: int,
                     backend: str = "auto", chunk_bytes: int = 1 << 26) -> WalkResult:
    """Sample the stylized walk; reproducible per seed, independent of chunking.

    Uniforms are drawn in per-trial rows, so trial k consumes the same stream
    regardless of the total trial count or the chosen backend.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    runner = _resolve_backend(backend)
    backend_name = "compiled" if runner is _compiled else "python"
    T, cap = params.T, params.N
    q0 = params.q0
    cdf = _conditional_fault_cdf(params.m, params.p_fail)
    steps_per_fault = 2 * params.log2_m_ceil

    attempts = np.zeros(trials, dtype=np.int64)
    completed = np.zeros(trials, dtype=np.uint8)
    q_total = np.zeros(trials, dtype=np.int64)
    steps = np.zeros(trials, dtype=np.int64)
    faults = np.zeros(trials, dtype=np.int64)
    seg_counts = np.zeros(trials, dtype=np.int32)
    seg_n = np.zeros((trials, T), dtype=np.int32)
    seg_e = np.zeros((trials, T), dtype=np.int64)

    width = 2 * cap
    chunk = max(1, min(trials, chunk_bytes // (8 * width)))
    rng = np.random.Generator(np.random.PCG64(seed))
    start = 0
    while start < trials:
        stop = min(start + chunk, trials)
        uniforms = rng.random((stop - start, width))
        runner.run_chunk(uniforms, q0, cdf, T, cap, steps_per_fault,
                         attempts[start:stop], completed[start:stop],
                         q_total[start:stop], steps[start:stop],
                         faults[start:stop], seg_counts[start:stop],
                         seg_n[start:stop], seg_e[start:stop])
        start = stop

    return WalkResult(params=params, trials=trials, seed=seed, backend=backend_name,
                      attempts=attempts, completed=completed.astype(bool),
                      q_total=q_total, steps=steps, faults=faults,
                      seg_counts=seg_counts, seg_n=seg_n, seg_e=seg_e)
