"""Execution of compiled schedules on a statevector simulator.

Two modes:

* ``run_ideal`` postselects the b=0 outcome on every gadget.  Since the family
  members of one (step, term) cell commute, their postselected product is
  exactly exp(-i * Gtilde * dt) for the rounded cell matrix, so the ideal run
  is computed by applying those 1-sparse block exponentials in schedule order.

* ``run_stochastic`` samples every gadget outcome.  An attempt ends in
  failure when any gadget in the segment faults; the walk then pushes the
  faulty applied operator on a stack and the next attempt targets its exact
  inverse (succeeded gadgets invert through gadgets again, faults and earlier
  corrections invert through exact two-query corrections).  The walk halts at
  the Chernoff attempt cap.  Gadget outcome probabilities are state
  independent, so outcomes are pre-drawn per attempt and the applied operator
  is assembled from cached window products; this is algebraically identical to
  gadget-by-gadget simulation.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .gadget import fault_probability
from .hamiltonian import TimeDependentHamiltonian
from .onesparse import KIND_IMAG_OFFDIAG, KIND_REAL_DIAG, KIND_REAL_OFFDIAG, color_edges, one_sparse_terms
from .planner import SegmentPlan, segment_plan
from .reference import metrics
from .selfinverse import decompose, rounded_data
from .tails import expected_capped_weight
from .walk import chernoff_cap

# ---------------------------------------------------------------------------
# block exponentials of 1-sparse terms
# ---------------------------------------------------------------------------


def _term_indices(term):
    if term.kind == KIND_REAL_DIAG:
        return np.array([p[0] for p in term.support], dtype=np.int64), None
    a = np.array([p[0] for p in term.support], dtype=np.int64)
    b = np.array([p[1] for p in term.support], dtype=np.int64)
    return a, b


def _apply_term_exponential(mat: np.ndarray, term, idx_a, idx_b, theta: np.ndarray):
    """In-place left-multiplication of mat by exp(-i * G * dt) for 1-sparse G."""
    if term.kind == KIND_REAL_DIAG:
        mat[idx_a] *= np.exp(-1j * theta)[:, None]
        return
    c = np.cos(theta)[:, None]
    s = np.sin(theta)[:, None]
    va = mat[idx_a]
    vb = mat[idx_b]
    if term.kind == KIND_REAL_OFFDIAG:
        mat[idx_a] = c * va - 1j * s * vb
        mat[idx_b] = -1j * s * va + c * vb
    else:
        mat[idx_a] = c * va + s * vb
        mat[idx_b] = -s * va + c * vb


def trotter_product(H: TimeDependentHamiltonian, t: float, r: int, *,
                    gamma: float | None = None, terms=None,
                    state0: np.ndarray | None = None) -> np.ndarray:
    """First-order product of term exponentials frozen at step left endpoints.

    With ``gamma`` set, each term is rounded onto the self-inverse lattice
    before exponentiation (the discretized evolution the gadgets realize);
    with ``gamma=None`` the exact term values are used.
    """
    if r < 1:
        raise ValueError("r must be >= 1")
    if terms is None:
        terms = one_sparse_terms(H, color_edges(H))
    dt = t / r
    t0s = np.arange(r, dtype=float) * dt
    thetas = []
    for term in terms:
        if gamma is None:
            thetas.append(term.values(t0s) * dt)
        else:
            data = rounded_data(term, t0s, gamma)
            scale = np.where(data.ell > 0, data.g / np.maximum(data.ell, 1), 0.0)
            thetas.append(scale[:, None] * data.h * dt)
    indices = [_term_indices(term) for term in terms]
    if state0 is None:
        out = np.eye(H.dim, dtype=np.complex128)
    else:
        out = np.asarray(state0, dtype=np.complex128).reshape(H.dim, 1).copy()
    for step in range(r):
        for term, (ia, ib), th in zip(terms, indices, thetas):
            _apply_term_exponential(out, term, ia, ib, th[step])
    return out if state0 is None else out.ravel()


# ---------------------------------------------------------------------------
# ideal (postselected) execution
# ---------------------------------------------------------------------------


@dataclass
class IdealResult:
    plan: SegmentPlan
    unitary: np.ndarray | None
    final_state: np.ndarray | None
    gadget_count: int
    log_success_probability: float
    truncated_query_expectation: float

    @property
    def success_probability(self) -> float:
        return math.exp(self.log_success_probability)

    @property
    def result(self) -> np.ndarray:
        return self.unitary if self.unitary is not None else self.final_state


def run_ideal(H: TimeDependentHamiltonian, t: float, eps: float, *,
              plan: SegmentPlan | None = None, state0: np.ndarray | None = None,
              c_r: float = 1.0) -> IdealResult:
    """Postselected execution of the compiled schedule."""
    if plan is None:
        plan = segment_plan(H, t, eps, c_r=c_r)
    if not plan.count_exact:
        raise ValueError("plan schedule was not materialized; too large to execute")
    out = trotter_product(H, plan.t, plan.r, gamma=plan.gamma, terms=plan.terms,
                          state0=state0)
    s_cells = plan.step_weights * plan.dt
    with np.errstate(divide="ignore"):
        log_p0 = -2.0 * np.log(np.cos(s_cells) + np.sin(s_cells))
    log_total = float(np.sum(np.where(plan.step_sizes > 0, plan.step_sizes * log_p0, 0.0)))
    full, rem = divmod(plan.gadget_count, plan.m)
    queries = full * expected_capped_weight(plan.m, plan.p1, plan.k1)
    if rem:
        queries += expected_capped_weight(rem, plan.p1, plan.k1)
    return IdealResult(
        plan=plan,
        unitary=out if state0 is None else None,
        final_state=None if state0 is None else out,
        gadget_count=plan.gadget_count,
        log_success_probability=log_total,
        truncated_query_expectation=queries,
    )


# ---------------------------------------------------------------------------
# stochastic execution with fault correction
# ---------------------------------------------------------------------------

_WINDOW = 256


class _FamilyCache:
    """Self-inverse families and their dense member stacks per (step, term)."""

    def __init__(self, plan: SegmentPlan, maxsize: int = 1024):
        self.plan = plan
        self.time_dependent = plan.hamiltonian.is_time_dependent
        self.maxsize = maxsize
        self._store: dict = {}

    def dense_stack(self, step: int, term_idx: int) -> np.ndarray:
        key = (step if self.time_dependent else 0, term_idx)
        hit = self._store.get(key)
        if hit is not None:
            return hit
        t0 = (step if self.time_dependent else 0) * self.plan.dt
        fam = decompose(self.plan.terms[term_idx], t0, self.plan.gamma)
        expected = int(self.plan.step_sizes[step, term_idx])
        if len(fam) != expected:
            raise AssertionError(
                f"family size {len(fam)} disagrees with plan cell {expected}")
        dim = self.plan.hamiltonian.dim
        stack = (np.stack([u.dense() for u in fam.terms])
                 if fam.terms else np.zeros((0, dim, dim), dtype=np.complex128))
        if len(self._store) >= self.maxsize:
            self._store.pop(next(iter(self._store)))
        self._store[key] = stack
        return stack


@dataclass
class _SegmentData:
    index: int
    start: int
    stop: int
    m_seg: int
    step: np.ndarray
    term: np.ndarray
    member: np.ndarray
    s: np.ndarray
    groups: list
    windows: list
    unitary: np.ndarray


class _SegmentEngine:
    """Window-cached products over the gadget stream, segment by segment."""

    def __init__(self, plan: SegmentPlan):
        if not plan.count_exact:
            raise ValueError("plan schedule was not materialized; too large to execute")
        self.plan = plan
        self.dim = plan.hamiltonian.dim
        self.families = _FamilyCache(plan)
        flat = plan.step_sizes.reshape(-1) if plan.M else np.zeros(1, dtype=np.int64)
        self._prefix = np.concatenate([np.zeros(1, dtype=np.int64), np.cumsum(flat)])
        self._segments: dict[int, _SegmentData] = {}

    def _locate(self, slots: np.ndarray):
        cell = np.searchsorted(self._prefix, slots, side="right") - 1
        member = slots - self._prefix[cell]
        return cell // max(self.plan.M, 1), cell % max(self.plan.M, 1), member

    def segment(self, seg: int) -> _SegmentData:
        hit = self._segments.get(seg)
        if hit is not None:
            return hit
        start, stop = self.plan.segment_bounds(seg)
        slots = np.arange(start, stop, dtype=np.int64)
        if slots.size:
            step, term, member = self._locate(slots)
            s = self.plan.step_weights[step, term] * self.plan.dt
        else:
            step = term = member = np.zeros(0, dtype=np.int64)
            s = np.zeros(0)
        p = np.zeros(0)
        if slots.size:
            c, sn = np.cos(s), np.sin(s)
            p = 2.0 * c * sn / (c + sn) ** 2
        groups = []
        for val in np.unique(s):
            idx = np.flatnonzero(s == val)
            groups.append((float(p[idx[0]]), idx))
        data = _SegmentData(index=seg, start=start, stop=stop, m_seg=int(slots.size),
                            step=step, term=term, member=member, s=s,
                            groups=groups, windows=[], unitary=np.eye(self.dim, dtype=np.complex128))
        windows = []
        for w0 in range(0, data.m_seg, _WINDOW):
            ops = self._slot_ops(data, w0, min(w0 + _WINDOW, data.m_seg))
            windows.append(self._tree(ops))
        data.windows = windows
        if windows:
            data.unitary = self._tree(np.stack(windows))
        self._segments[seg] = data
        return data

    def _tree(self, mats: np.ndarray) -> np.ndarray:
        """Product mats[k-1] @ ... @ mats[0] by pairwise reduction."""
        if mats.shape[0] == 0:
            return np.eye(self.dim, dtype=np.complex128)
        while mats.shape[0] > 1:
            if mats.shape[0] % 2 == 1:
                pad = np.eye(self.dim, dtype=np.complex128)[None]
                mats = np.concatenate([mats, pad])
            mats = np.matmul(mats[1::2], mats[0::2])
        return mats[0]

    def _slot_ops(self, data: _SegmentData, a: int, b: int) -> np.ndarray:
        """Intended gadget operators exp(-i U s) for local slots [a, b)."""
        count = b - a
        out = np.empty((count, self.dim, self.dim), dtype=np.complex128)
        if count == 0:
            return out
        step = data.step[a:b]
        term = data.term[a:b]
        member = data.member[a:b]
        s = data.s[a:b]
        eye = np.eye(self.dim, dtype=np.complex128)
        boundaries = np.flatnonzero((np.diff(step) != 0) | (np.diff(term) != 0))
        run_starts = np.concatenate([[0], boundaries + 1, [count]])
        for i in range(len(run_starts) - 1):
            lo, hi = int(run_starts[i]), int(run_starts[i + 1])
            stack = self.families.dense_stack(int(step[lo]), int(term[lo]))
            u = stack[member[lo:hi]]
            sv = s[lo:hi][:, None, None]
            out[lo:hi] = np.cos(sv) * eye - 1j * np.sin(sv) * u
        return out

    def slot_generator(self, data: _SegmentData, slot: int) -> np.ndarray:
        stack = self.families.dense_stack(int(data.step[slot]), int(data.term[slot]))
        return stack[int(data.member[slot])]

    def clean_stretch(self, data: _SegmentData, a: int, b: int) -> np.ndarray | None:
        """Product of the intended operators over local slots [a, b); None = identity."""
        if a >= b:
            return None
        w_first = a // _WINDOW
        w_last = (b - 1) // _WINDOW
        if w_first == w_last and (a % _WINDOW != 0 or b - a < _WINDOW):
            return self._sequential(data, a, b)
        pieces = []
        cut = a
        if a % _WINDOW != 0:
            cut = (w_first + 1) * _WINDOW
            pieces.append(self._sequential(data, a, cut))
        while cut + _WINDOW <= b:
            pieces.append(data.windows[cut // _WINDOW])
            cut += _WINDOW
        if cut < b:
            pieces.append(self._sequential(data, cut, b))
        out = pieces[0]
        for piece in pieces[1:]:
            out = piece @ out
        return out

    def _sequential(self, data: _SegmentData, a: int, b: int) -> np.ndarray:
        ops = self._slot_ops(data, a, b)
        out = ops[0]
        for i in range(1, ops.shape[0]):
            out = ops[i] @ out
        return out


class _AttemptNode:
    __slots__ = ("parent", "depth", "fault_seg", "fault_local", "fault_mats",
                 "nongadget_seg", "applied")

    def __init__(self, parent, depth, fault_seg, fault_local, fault_mats, nongadget_seg):
        self.parent = parent
        self.depth = depth
        self.fault_seg = fault_seg
        self.fault_local = fault_local
        self.fault_mats = fault_mats
        self.nongadget_seg = nongadget_seg
        self.applied = None


@dataclass
class AttemptLog:
    segment_index: int
    success: bool
    faults: int
    base_queries: int
    correction_queries: int
    recursive_steps: int


@dataclass
class SegmentLog:
    index: int
    attempts: list
    n_fail: int
    total_faults: int
    correction_queries: int

    @property
    def q_bound(self) -> int:
        return 2 * (2 * self.n_fail - 1) * self.total_faults if self.n_fail > 0 else 0


@dataclass
class RunTrace:
    seed: int
    completed: bool
    final_state: np.ndarray
    walk_positions: list
    total_attempts: int
    total_correction_queries: int
    recursive_measurement_steps: int
    attempt_cap: int
    cap_slack: int
    segments: list
    plan: SegmentPlan | None = None

    @property
    def n_fail_per_segment(self) -> list:
        return [seg.n_fail for seg in self.segments]

    def q_accounting_ok(self) -> bool:
        total = 0
        for seg in self.segments:
            if seg.correction_queries > seg.q_bound:
                return False
            total += seg.correction_queries
        return total == self.total_correction_queries

    def to_json_dict(self) -> dict:
        return {
            "seed": self.seed,
            "completed": self.completed,
            "attempt_cap": self.attempt_cap,
            "cap_slack": self.cap_slack,
            "total_attempts": self.total_attempts,
            "total_correction_queries": self.total_correction_queries,
            "recursive_measurement_steps": self.recursive_measurement_steps,
            "walk_positions": self.walk_positions,
            "segments": [
                {
                    "index": seg.index,
                    "n_fail": seg.n_fail,
                    "total_faults": seg.total_faults,
                    "correction_queries": seg.correction_queries,
                    "attempts": [
                        {
                            "success": a.success,
                            "faults": a.faults,
                            "base_queries": a.base_queries,
                            "correction_queries": a.correction_queries,
                            "recursive_steps": a.recursive_steps,
                        }
                        for a in seg.attempts
                    ],
                }
                for seg in self.segments
            ],
            "final_state": [[float(z.real), float(z.imag)] for z in self.final_state],
        }


class StochasticRunner:
    """Reusable stochastic executor for one compiled plan (engine shared by seeds)."""

    def __init__(self, plan: SegmentPlan, attempt_cap: int | None = None):
        self.plan = plan
        self.engine = _SegmentEngine(plan)
        lam, cap = chernoff_cap(plan.num_segments, plan.eps)
        self.cap_slack = lam
        self.attempt_cap = cap if attempt_cap is None else attempt_cap
        self.log2_m = max(0, (plan.m - 1).bit_length())

    def _draw_faults(self, rng, data: _SegmentData, nongadget: np.ndarray) -> np.ndarray:
        picks = []
        for p_val, slots in data.groups:
            if nongadget.size:
                excluded = np.intersect1d(slots, nongadget, assume_unique=True)
            else:
                excluded = nongadget
            allowed_count = slots.size - excluded.size
            if allowed_count <= 0 or p_val <= 0.0:
                continue
            k = int(rng.binomial(allowed_count, p_val))
            if k == 0:
                continue
            allowed = np.setdiff1d(slots, excluded, assume_unique=True) if excluded.size else slots
            chosen = rng.choice(allowed.size, size=k, replace=False)
            picks.append(allowed[np.sort(chosen)])
        if not picks:
            return np.zeros(0, dtype=np.int64)
        return np.sort(np.concatenate(picks))

    def _applied_stretch(self, data: _SegmentData, node: _AttemptNode, a: int, b: int):
        out = None
        prev = a
        for local_p, mat in zip(node.fault_local, node.fault_mats):
            if local_p < a or local_p >= b:
                continue
            piece = self._target_stretch(data, node.parent, prev, int(local_p))
            out = piece if out is None else (piece @ out if piece is not None else out)
            out = mat if out is None else mat @ out
            prev = int(local_p) + 1
        piece = self._target_stretch(data, node.parent, prev, b)
        if piece is not None:
            out = piece if out is None else piece @ out
        return out

    def _target_stretch(self, data: _SegmentData, parent, a: int, b: int):
        """Stretch [a, b) of the target sequence of an attempt whose parent is given."""
        if a >= b:
            return None
        if parent is None:
            return self.engine.clean_stretch(data, a, b)
        m = data.m_seg
        inner = self._applied_stretch(data, parent, m - b, m - a)
        return None if inner is None else inner.conj().T

    def _build_node(self, data: _SegmentData, parent, fault_slots: np.ndarray,
                    nongadget: np.ndarray) -> _AttemptNode:
        depth = 0 if parent is None else parent.depth + 1
        m = data.m_seg
        if depth % 2 == 0:
            local = fault_slots
            sign = 1.0
        else:
            local = np.sort(m - 1 - fault_slots)
            sign = -1.0
        eye = np.eye(self.engine.dim, dtype=np.complex128)
        mats = []
        for lp in local:
            slot = int(lp) if depth % 2 == 0 else int(m - 1 - lp)
            u = self.engine.slot_generator(data, slot)
            mats.append((eye + 1j * sign * u) / math.sqrt(2.0))
        node = _AttemptNode(parent=parent, depth=depth, fault_seg=fault_slots,
                            fault_local=local, fault_mats=mats, nongadget_seg=nongadget)
        applied = self._applied_stretch(data, node, 0, m)
        node.applied = applied if applied is not None else eye.copy()
        return node

    def run(self, seed: int, state0: np.ndarray | None = None, rng=None) -> RunTrace:
        plan = self.plan
        if rng is None:
            rng = np.random.Generator(np.random.PCG64(int(seed)))
        dim = plan.hamiltonian.dim
        if state0 is None:
            state = np.zeros(dim, dtype=np.complex128)
            state[0] = 1.0
        else:
            state = np.asarray(state0, dtype=np.complex128).copy()

        walk_positions = [0]
        segments: list[SegmentLog] = []
        attempts_total = 0
        q_total = 0
        rec_steps = 0
        completed_segments = 0
        incomplete = False

        for seg in range(plan.num_segments):
            data = self.engine.segment(seg)
            stack: list[_AttemptNode] = []
            logs: list[AttemptLog] = []
            n_fail = 0
            e_seg = 0
            q_seg = 0
            done = False
            while not done:
                if attempts_total == self.attempt_cap:
                    incomplete = True
                    break
                parent = stack[-1] if stack else None
                if parent is None:
                    nongadget = np.zeros(0, dtype=np.int64)
                else:
                    nongadget = np.union1d(parent.fault_seg, parent.nongadget_seg)
                fault_slots = self._draw_faults(rng, data, nongadget)
                attempts_total += 1
                corr = 2 * int(nongadget.size)
                q_seg += corr
                q_total += corr
                f = int(fault_slots.size)
                steps = 1 + 2 * f * self.log2_m
                rec_steps += steps
                logs.append(AttemptLog(segment_index=seg, success=(f == 0), faults=f,
                                       base_queries=plan.k1, correction_queries=corr,
                                       recursive_steps=steps))
                if f == 0:
                    if parent is None:
                        state = data.unitary @ state
                        completed_segments += 1
                        done = True
                    else:
                        state = parent.applied.conj().T @ state
                        stack.pop()
                else:
                    n_fail += 1
                    e_seg += f
                    node = self._build_node(data, parent, fault_slots, nongadget)
                    state = node.applied @ state
                    stack.append(node)
                walk_positions.append(completed_segments - len(stack))
            segments.append(SegmentLog(index=seg, attempts=logs, n_fail=n_fail,
                                       total_faults=e_seg, correction_queries=q_seg))
            if incomplete:
                break

        return RunTrace(seed=int(seed), completed=not incomplete, final_state=state,
                        walk_positions=walk_positions, total_attempts=attempts_total,
                        total_correction_queries=q_total,
                        recursive_measurement_steps=rec_steps,
                        attempt_cap=self.attempt_cap, cap_slack=self.cap_slack,
                        segments=segments, plan=plan)


def run_stochastic(H: TimeDependentHamiltonian, t: float, eps: float, seed: int, *,
                   plan: SegmentPlan | None = None,
                   state0: np.ndarray | None = None) -> RunTrace:
    """One seeded stochastic execution (builds a fresh engine; see StochasticRunner)."""
    if plan is None:
        plan = segment_plan(H, t, eps)
    return StochasticRunner(plan).run(seed, state0=state0)


def error_vs_exact(result, reference) -> dict:
    """Distance metrics between an execution result and a reference evolution."""

    def unwrap(obj):
        if isinstance(obj, np.ndarray):
            return obj
        for attr in ("unitary", "final_state"):
            val = getattr(obj, attr, None)
            if val is not None:
                return val
        raise TypeError(f"cannot extract state or unitary from {type(obj).__name__}")

    return metrics(unwrap(result), unwrap(reference))
