# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled kernels.

Mirrors _kernels_py item by item.  The multiply/add order inside the lattice
update matches the vectorized NumPy expression and the module is built with
FMA contraction disabled, so probability lattices and walk outputs are
bit-identical across backends.  Order-dependent scalar accumulators
(clamped mass, second moment history) agree only to roundoff.
"""

import numpy as np

cimport numpy as cnp

cnp.import_array()

BACKEND_NAME = "compiled"


def dp_evolve(cnp.float64_t[::1] up, cnp.float64_t[::1] down,
              cnp.float64_t[::1] margin, Py_ssize_t n_steps,
              bint may_clamp, bint strict, bint want_m2):
    """See _kernels_py.dp_evolve."""
    cdef Py_ssize_t half = (up.shape[0] - 1) // 2
    old_arr = np.zeros(n_steps + 1, dtype=np.float64)
    new_arr = np.zeros(n_steps + 1, dtype=np.float64)
    cdef cnp.float64_t[::1] old = old_arr
    cdef cnp.float64_t[::1] new = new_arr
    old[0] = 1.0

    m2_arr = np.zeros(n_steps + 1, dtype=np.float64) if want_m2 else None
    cdef cnp.float64_t[::1] m2
    if want_m2:
        m2 = m2_arr

    cdef double worst = np.inf
    cdef double clamped_mass = 0.0
    cdef long long first_violation_x = -1

    cdef Py_ssize_t n, j, k, off, min_abs, ax
    cdef double mg, acc, xv, pk
    cdef bint violated

    for n in range(1, n_steps + 1):
        off = half - n + 1

        if may_clamp:
            violated = False
            min_abs = -1
            for j in range(n):
                if old[j] > 0.0:
                    mg = margin[off + 2 * j]
                    if mg < worst:
                        worst = mg
                    if mg < 0.0:
                        violated = True
                        ax = 2 * j - (n - 1)
                        if ax < 0:
                            ax = -ax
                        if min_abs < 0 or ax < min_abs:
                            min_abs = ax
            if violated:
                if first_violation_x < 0:
                    first_violation_x = min_abs
                if strict:
                    return (old_arr[:n], m2_arr, worst, clamped_mass,
                            first_violation_x, True)
                for j in range(n):
                    if old[j] > 0.0 and margin[off + 2 * j] < 0.0:
                        clamped_mass = clamped_mass + old[j]

        new[0] = old[0] * down[off]
        for k in range(1, n):
            new[k] = old[k] * down[off + 2 * k] + old[k - 1] * up[off + 2 * (k - 1)]
        new[n] = old[n - 1] * up[off + 2 * (n - 1)]

        if want_m2:
            acc = 0.0
            for k in range(n + 1):
                xv = 2.0 * k - n
                pk = new[k]
                acc = acc + pk * xv * xv
            m2[n] = acc

        old, new = new, old
        old_arr, new_arr = new_arr, old_arr

    return old_arr, m2_arr, worst, clamped_mass, first_violation_x, False


def walk_terminal(cnp.float64_t[:, ::1] uniforms, cnp.float64_t[::1] up,
                  Py_ssize_t half):
    """See _kernels_py.walk_terminal."""
    cdef Py_ssize_t n_walks = uniforms.shape[0]
    cdef Py_ssize_t n_steps = uniforms.shape[1]
    out_arr = np.zeros(n_walks, dtype=np.int64)
    cdef cnp.int64_t[::1] out = out_arr
    cdef Py_ssize_t t, s
    cdef long long x
    with nogil:
        for t in range(n_walks):
            x = 0
            for s in range(n_steps):
                if uniforms[t, s] < up[x + half]:
                    x = x + 1
                else:
                    x = x - 1
            out[t] = x
    return out_arr


def walk_lag_products(cnp.float64_t[:, ::1] uniforms, cnp.float64_t[::1] up,
                      Py_ssize_t half, Py_ssize_t lag_end):
    """See _kernels_py.walk_lag_products."""
    cdef Py_ssize_t n_walks = uniforms.shape[0]
    cdef Py_ssize_t n_steps = uniforms.shape[1]
    cdef Py_ssize_t width = n_steps - lag_end + 1
    per_walk_arr = np.zeros(n_walks, dtype=np.int64)
    per_start_arr = np.zeros(width, dtype=np.int64)
    term_arr = np.zeros(n_walks, dtype=np.int64)
    ds_arr = np.empty(n_steps, dtype=np.int8)
    cdef cnp.int64_t[::1] per_walk = per_walk_arr
    cdef cnp.int64_t[::1] per_start = per_start_arr
    cdef cnp.int64_t[::1] term = term_arr
    cdef cnp.int8_t[::1] ds = ds_arr
    cdef Py_ssize_t t, s, i
    cdef long long x, acc, p
    with nogil:
        for t in range(n_walks):
            x = 0
            for s in range(n_steps):
                if uniforms[t, s] < up[x + half]:
                    x = x + 1
                    ds[s] = 1
                else:
                    x = x - 1
                    ds[s] = -1
            term[t] = x
            acc = 0
            for i in range(width):
                p = <long long> ds[i] * <long long> ds[i + lag_end - 1]
                acc = acc + p
                per_start[i] = per_start[i] + p
            per_walk[t] = acc
    return per_walk_arr, per_start_arr, term_arr
