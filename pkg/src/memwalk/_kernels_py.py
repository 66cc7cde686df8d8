"""Pure-NumPy reference kernels.

Semantics contract shared with the compiled module ``memwalk._kernels``:
probability lattices and walk outputs must be bit-identical between the two
backends (same table lookups, same multiply/add order, no FMA contraction).
Scalar accumulators that involve a summation order (clamped mass, second
moment history) are only guaranteed to agree to roundoff.
"""

from __future__ import annotations

import numpy as np

BACKEND_NAME = "python"


def dp_evolve(up, down, margin, n_steps, may_clamp, strict, want_m2):
    """Propagate the displacement distribution for n_steps steps.

    up/down/margin are float64 tables over x in [-H, H] with H >= n_steps,
    indexed by x + H (see profiles.transfer_tables).  State at level n is a
    float64 array of length n+1, entry k holding the probability of
    displacement x = 2k - n.

    Returns (probs, m2_hist, worst_margin, clamped_mass, first_violation_x,
    violated).  m2_hist is None unless want_m2; worst_margin is +inf unless
    may_clamp (the caller derives it from the static table in that case);
    first_violation_x is -1 when no transfer probability ever left [0, 1] on
    the support; violated means a violation was hit in strict mode and the
    returned lattice is partial.
    """
    half = (len(up) - 1) // 2
    old = np.zeros(n_steps + 1, dtype=np.float64)
    new = np.zeros(n_steps + 1, dtype=np.float64)
    old[0] = 1.0

    m2_hist = np.zeros(n_steps + 1, dtype=np.float64) if want_m2 else None
    xbuf = np.empty(n_steps + 1, dtype=np.float64) if want_m2 else None
    karr = np.arange(n_steps + 1, dtype=np.float64) if want_m2 else None

    worst = np.inf
    clamped_mass = 0.0
    first_violation_x = -1

    for n in range(1, n_steps + 1):
        off = half - n + 1
        stop = off + 2 * n - 1
        down_vals = down[off:stop:2]     # source level entries j = 0..n-1
        up_vals = up[off:stop:2]

        if may_clamp:
            support = old[:n] > 0.0
            if support.any():
                margins = margin[off:stop:2][support]
                m = margins.min()
                if m < worst:
                    worst = m
                viol = (margin[off:stop:2] < 0.0) & support
                if viol.any():
                    if first_violation_x < 0:
                        js = np.nonzero(viol)[0]
                        first_violation_x = int(np.abs(2 * js - (n - 1)).min())
                    if strict:
                        return old[:n], m2_hist, worst, clamped_mass, first_violation_x, True
                    clamped_mass += float(old[:n][viol].sum())

        new[0] = old[0] * down_vals[0]
        if n > 1:
            new[1:n] = old[1:n] * down_vals[1:] + old[0 : n - 1] * up_vals[: n - 1]
        new[n] = old[n - 1] * up_vals[n - 1]

        if want_m2:
            np.multiply(karr[: n + 1], 2.0, out=xbuf[: n + 1])
            xbuf[: n + 1] -= n
            np.multiply(xbuf[: n + 1], xbuf[: n + 1], out=xbuf[: n + 1])
            m2_hist[n] = float(np.dot(new[: n + 1], xbuf[: n + 1]))

        old, new = new, old

    return old, m2_hist, worst, clamped_mass, first_violation_x, False


def walk_terminal(uniforms, up, half):
    """Terminal displacements for a block of walks.

    uniforms is (n_walks, n_steps) float64, one row per walk, consumed left
    to right; step s of walk t goes up iff uniforms[t, s] < up[x + half].
    """
    n_walks, n_steps = uniforms.shape
    cols = np.ascontiguousarray(uniforms.T)
    x = np.zeros(n_walks, dtype=np.int64)
    for s in range(n_steps):
        pu = up[x + half]
        x += np.where(cols[s] < pu, 1, -1)
    return x


def walk_lag_products(uniforms, up, half, lag_end):
    """Increment products at a fixed lag, per walk and per start index.

    For each walk, increments d_1..d_S are generated as in walk_terminal and
    the products d_{i+1} * d_{i+lag_end} for i = 0..S-lag_end are formed.
    Returns (per_walk, per_start, terminal) where per_walk[t] is the integer
    sum of the products of walk t, per_start[i] the integer sum over walks at
    start index i, and terminal the final displacements.
    """
    n_walks, n_steps = uniforms.shape
    cols = np.ascontiguousarray(uniforms.T)
    x = np.zeros(n_walks, dtype=np.int64)
    ds = np.empty((n_walks, n_steps), dtype=np.int8)
    one = np.int8(1)
    minus_one = np.int8(-1)
    for s in range(n_steps):
        pu = up[x + half]
        step = np.where(cols[s] < pu, one, minus_one)
        ds[:, s] = step
        x += step
    width = n_steps - lag_end + 1
    prod = ds[:, :width].astype(np.int64) * ds[:, lag_end - 1 :]
    per_walk = prod.sum(axis=1)
    per_start = prod.sum(axis=0)
    return per_walk, per_start, x
