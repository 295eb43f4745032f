"""Batch command-line entry point.

Subcommands: decompose, plan, run, walk, sweep, verify.  All randomness is
seeded from flags; identical invocations produce byte-identical output.
Floats in CSV output are printed with 17 significant digits (round-trip
exact); JSON uses Python's shortest round-trip float representation.

Exit codes: 0 success, 1 usage or validation failure, 2 internal error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import traceback
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .executor import StochasticRunner, error_vs_exact, run_ideal
from .hamiltonian import DimensionCapError, SpecFormatError, SpecValidationError, load_spec
from .onesparse import color_edges, one_sparse_terms
from .planner import resource_estimate, segment_plan
from .reference import exact_evolution
from .selfinverse import decompose as si_decompose
from .verify_suites import run_suite
from .walk import WalkParameters, monte_carlo_walk

SWEEP_MEASURE_LIMIT = 200_000  # max r*M for which a sweep row measures the error

SWEEP_COLUMNS = ["eps", "r", "gamma", "m", "k1", "num_segments", "gadget_count",
                 "queries_total", "measured_error"]


def _f17(x: float) -> str:
    return format(float(x), ".17g")


def _emit(text: str, out_path: str | None):
    if out_path:
        with open(out_path, "w", encoding="utf-8", newline="") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        sys.stderr.write(f"{self.prog}: error: {message}\n")
        raise SystemExit(1)


def _build_parser() -> _Parser:
    parser = _Parser(prog="sihsim",
                     description="Sparse-Hamiltonian simulation via self-inverse gadget schedules.")
    parser.add_argument("--version", action="version", version=f"sihsim {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("decompose", help="partition a Hamiltonian into 1-sparse terms")
    p.add_argument("--spec", required=True, help="Hamiltonian spec file (JSON)")
    p.add_argument("--t0", type=float, default=0.0, help="freeze time for family summaries")
    p.add_argument("--gamma", type=float, default=None,
                   help="also decompose each term into a self-inverse family at this max-norm error")
    p.add_argument("--dump", action="store_true", help="print terms as spec-file fragments")
    p.add_argument("--out", default=None, help="output path (default stdout)")

    p = sub.add_parser("plan", help="emit the compiled schedule and resource estimate as JSON")
    p.add_argument("--spec", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--c-r", type=float, default=1.0, help="Trotter order constant (default 1)")
    p.add_argument("--out", default=None)

    p = sub.add_parser("run", help="execute a plan in ideal or stochastic mode")
    p.add_argument("--mode", choices=["ideal", "stochastic"], required=True)
    p.add_argument("--spec", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--seed", type=int, default=0, help="base RNG seed (stochastic mode)")
    p.add_argument("--seeds", type=int, default=1,
                   help="number of consecutive seeds; >1 emits batch CSV statistics")
    p.add_argument("--jobs", type=int, default=1, help="parallel workers for batch runs")
    p.add_argument("--state", type=int, default=None,
                   help="initial basis state index (default |0...0>)")
    p.add_argument("--metrics", action="store_true",
                   help="also compare against the exact-evolution reference")
    p.add_argument("--out", default=None)

    p = sub.add_parser("walk", help="Monte Carlo of the abstract segment walk")
    p.add_argument("--T", type=int, required=True, help="segments to complete")
    p.add_argument("--m", type=int, required=True, help="gadgets per segment attempt")
    p.add_argument("--eps", type=float, required=True)
    p.add_argument("--trials", type=int, required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--p-fail", type=float, default=None,
                   help="per-gadget failure probability (default 1/(4m))")
    p.add_argument("--backend", choices=["auto", "compiled", "python"], default="auto")
    p.add_argument("--csv", default=None, help="write per-trial rows (trial, attempts, Q, steps)")
    p.add_argument("--out", default=None, help="JSON summary path (default stdout)")

    p = sub.add_parser("sweep", help="planner sweep over a list of accuracies; CSV output")
    p.add_argument("--spec", required=True)
    p.add_argument("--t", type=float, required=True)
    p.add_argument("--eps", required=True,
                   help="comma-separated accuracy list, e.g. 1e-2,1e-4,1e-6")
    p.add_argument("--c-r", type=float, default=1.0)
    p.add_argument("--out", default=None,
                   help=f"CSV path (default stdout); columns: {','.join(SWEEP_COLUMNS)}; "
                        f"measured_error is filled when r*M <= {SWEEP_MEASURE_LIMIT}")

    p = sub.add_parser("verify", help="run a named invariant suite")
    p.add_argument("--suite", required=True,
                   help="one of lemma1, example, gadget, partition, appendix, all")
    return parser


def _cmd_decompose(args) -> int:
    H = load_spec(args.spec)
    plan = color_edges(H)
    terms = one_sparse_terms(H, plan)
    doc = {"n_qubits": H.n_qubits, "d": H.d, "num_colors": plan.num_colors,
           "M": len(terms), "terms": []}
    for term in terms:
        row: dict = {"color": str(term.color), "kind": term.kind}
        if args.dump:
            if term.is_diagonal:
                row["diag"] = [{"index": p[0], "re": c.to_json_dict()}
                               for p, c in zip(term.support, term.coeffs)]
            else:
                key = "re" if term.kind == "real-offdiagonal" else "im"
                row["entries"] = [{"row": p[0], "col": p[1], key: c.to_json_dict()}
                                  for p, c in zip(term.support, term.coeffs)]
        if args.gamma is not None:
            fam = si_decompose(term, args.t0, args.gamma)
            row["family"] = {"ell": fam.ell, "g": fam.g, "weight": fam.weight,
                             "size": len(fam)}
        doc["terms"].append(row)
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _cmd_plan(args) -> int:
    H = load_spec(args.spec)
    plan = segment_plan(H, args.t, args.eps, c_r=args.c_r)
    est = resource_estimate(plan)
    doc = {"plan": plan.to_json_dict(), "resource_estimate": est.to_json_dict()}
    _emit(json.dumps(doc, indent=2) + "\n", args.out)
    return 0


def _batch_worker(payload):
    spec_path, t, eps, seeds = payload
    H = load_spec(spec_path)
    plan = segment_plan(H, t, eps)
    runner = StochasticRunner(plan)
    rows = []
    for seed in seeds:
        trace = runner.run(seed)
        rows.append((seed, trace.completed, trace.total_attempts,
                     trace.total_correction_queries, trace.recursive_measurement_steps))
    return rows


def _cmd_run(args) -> int:
    H = load_spec(args.spec)
    state0 = None
    if args.state is not None:
        state0 = np.zeros(H.dim, dtype=np.complex128)
        state0[args.state] = 1.0

    if args.mode == "ideal":
        result = run_ideal(H, args.t, args.eps)
        doc = {
            "mode": "ideal",
            "plan": result.plan.to_json_dict(),
            "gadget_count": result.gadget_count,
            "log_success_probability": result.log_success_probability,
            "success_probability": result.success_probability,
            "truncated_query_expectation": result.truncated_query_expectation,
        }
        if args.metrics:
            ref = exact_evolution(H, args.t)
            doc["metrics"] = error_vs_exact(result, ref)
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return 0

    if args.seeds <= 1:
        plan = segment_plan(H, args.t, args.eps)
        trace = StochasticRunner(plan).run(args.seed, state0=state0)
        doc = trace.to_json_dict()
        if args.metrics:
            ref = exact_evolution(H, args.t)
            psi0 = state0 if state0 is not None else np.eye(H.dim)[:, 0]
            doc["metrics"] = error_vs_exact(trace, ref.unitary @ psi0)
        _emit(json.dumps(doc, indent=2) + "\n", args.out)
        return 0

    seeds = list(range(args.seed, args.seed + args.seeds))
    if args.jobs > 1:
        chunks = [seeds[i::args.jobs] for i in range(args.jobs)]
        payloads = [(args.spec, args.t, args.eps, chunk) for chunk in chunks if chunk]
        rows = []
        with ProcessPoolExecutor(max_workers=args.jobs) as pool:
            for part in pool.map(_batch_worker, payloads):
                rows.extend(part)
        rows.sort(key=lambda r: r[0])
    else:
        rows = _batch_worker((args.spec, args.t, args.eps, seeds))
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(["seed", "completed", "attempts", "correction_queries", "recursive_steps"])
    for seed, completed, attempts, q, steps in rows:
        writer.writerow([seed, int(completed), attempts, q, steps])
    _emit(buf.getvalue(), args.out)
    return 0


def _cmd_walk(args) -> int:
    params = WalkParameters.build(T=args.T, m=args.m, eps=args.eps, p_fail=args.p_fail)
    result = monte_carlo_walk(params, trials=args.trials, seed=args.seed,
                              backend=args.backend)
    if args.csv:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["trial", "attempts", "Q", "steps"])
        for i in range(result.trials):
            writer.writerow([i, int(result.attempts[i]), int(result.q_total[i]),
                             int(result.steps[i])])
        _emit(buf.getvalue(), args.csv)
    _emit(json.dumps(result.summary(), indent=2) + "\n", args.out)
    return 0


def _cmd_sweep(args) -> int:
    H = load_spec(args.spec)
    try:
        eps_list = [float(tok) for tok in args.eps.split(",") if tok.strip()]
    except ValueError as exc:
        raise SpecFormatError(f"bad --eps list: {exc}") from exc
    if not eps_list or any(not (0.0 < e < 1.0) for e in eps_list):
        raise SpecValidationError("--eps values must lie in (0, 1)")
    ref = None
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(SWEEP_COLUMNS)
    for eps in eps_list:
        plan = segment_plan(H, args.t, eps, c_r=args.c_r)
        est = resource_estimate(plan)
        measured = ""
        if plan.count_exact and plan.r * max(plan.M, 1) <= SWEEP_MEASURE_LIMIT:
            if ref is None:
                ref = exact_evolution(H, args.t, tol=min(eps_list) * 1e-3)
            result = run_ideal(H, args.t, eps, plan=plan)
            measured = _f17(error_vs_exact(result, ref)["operator_norm_distance"])
        writer.writerow([_f17(eps), plan.r, _f17(plan.gamma), plan.m, plan.k1,
                         plan.num_segments, plan.gadget_count, est.queries_total,
                         measured])
    _emit(buf.getvalue(), args.out)
    return 0


def _cmd_verify(args) -> int:
    rows = run_suite(args.suite)
    failed = 0
    for name, ok, detail in rows:
        print(f"{'PASS' if ok else 'FAIL'} {name}: {detail}")
        failed += 0 if ok else 1
    return 0 if failed == 0 else 1


_DISPATCH = {
    "decompose": _cmd_decompose,
    "plan": _cmd_plan,
    "run": _cmd_run,
    "walk": _cmd_walk,
    "sweep": _cmd_sweep,
    "verify": _cmd_verify,
}


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return _DISPATCH[args.command](args)
    except (SpecFormatError, SpecValidationError, DimensionCapError, ValueError,
            OSError) as exc:
        sys.stderr.write(f"sihsim: {exc}\n")
        return 1
    except Exception:  # internal error
        traceback.print_exc()
        return 2


if __name__ == "__main__":
    sys.exit(main())
