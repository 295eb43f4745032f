# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled inner loop for the segmented random-walk Monte Carlo sampler.

Consumes pre-drawn uniforms row by row (one row per trial): one uniform per
attempt, plus a second when the attempt fails and a fault count is needed.
The pure-Python fallback in ``_walk_py`` implements the identical protocol,
so both backends produce bit-identical results from the same uniforms.
"""


def run_chunk(double[:, ::1] uniforms,
              double q0,
              double[::1] cond_cdf,
              int num_segments,
              long long attempt_cap,
              long long steps_per_fault,
              long long[::1] attempts_out,
              unsigned char[::1] completed_out,
              long long[::1] q_out,
              long long[::1] steps_out,
              long long[::1] faults_out,
              int[::1] seg_count_out,
              int[:, ::1] seg_n_out,
              long long[:, ::1] seg_e_out):
    cdef Py_ssize_t n_trials = uniforms.shape[0]
    cdef Py_ssize_t r
    cdef long long att, q, st, ftot, n, e, f, pos
    cdef int seg, sc, k, done
    cdef Py_ssize_t idx
    cdef double u, v

    for r in range(n_trials):
        idx = 0
        att = 0
        q = 0
        st = 0
        ftot = 0
        sc = 0
        done = 1
        for seg in range(num_segments):
            n = 0
            e = 0
            pos = 0
            while pos < 1:
                if att == attempt_cap:
                    done = 0
                    break
                u = uniforms[r, idx]
                idx += 1
                att += 1
                if u < q0:
                    pos += 1
                    st += 1
                else:
                    v = uniforms[r, idx]
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
            seg_n_out[r, sc] = <int> n
            seg_e_out[r, sc] = e
            sc += 1
            if n > 0:
                q += 2 * (2 * n - 1) * e
            if done == 0:
                break
        attempts_out[r] = att
        completed_out[r] = <unsigned char> done
        q_out[r] = q
        steps_out[r] = st
        faults_out[r] = ftot
        seg_count_out[r] = sc
