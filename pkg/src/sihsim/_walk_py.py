"""Pure-Python fallback for the walk sampler inner loop.

Mirrors ``_walkcore.run_chunk`` statement for statement: the two backends
consume the same pre-drawn uniforms under the same protocol and must produce
bit-identical outputs.  This path is roughly two orders of magnitude slower;
see ``benchmarks/bench_walk.py``.
"""

from __future__ import annotations


def run_chunk(uniforms, q0, cond_cdf, num_segments, attempt_cap, steps_per_fault,
              attempts_out, completed_out, q_out, steps_out, faults_out,
              seg_count_out, seg_n_out, seg_e_out):
    n_trials = uniforms.shape[0]
    for r in range(n_trials):
        row = uniforms[r]
        idx = 0
        att = 0
        q = 0
        st = 0
        ftot = 0
        sc = 0
        done = 1
        for _seg in range(num_segments):
            n = 0
            e = 0
            pos = 0
            while pos < 1:
                if att == attempt_cap:
                    done = 0
                    break
                u = row[idx]
                idx += 1
                att += 1
                if u < q0:
                    pos += 1
                    st += 1
                else:
                    v = row[idx]
                    idx += 1
                    k = 0
                    while v >= cond_cdf[k]:
                        k += 1
                    f = k + 1
                    n += 1
                    e += f
                    ftot += f
                    pos -= 1
                    st += 1 + f * steps_per_fault
            seg_n_out[r, sc] = n
            seg_e_out[r, sc] = e
            sc += 1
            if n > 0:
                q += 2 * (2 * n - 1) * e
            if done == 0:
                break
        attempts_out[r] = att
        completed_out[r] = done
        q_out[r] = q
        steps_out[r] = st
        faults_out[r] = ftot
        seg_count_out[r] = sc
