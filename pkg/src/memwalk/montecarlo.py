"""Monte Carlo trajectory sampling with reproducible substreams.

RNG scheme (documented so seeds are portable): trajectory j of a run with
seed s draws its uniforms from a Philox4x64 counter-based generator keyed by
(w0, w1) where

    w0 = s XOR splitmix64(j),     w1 = splitmix64(w0),

and splitmix64 is the standard 64-bit finalizer (increment
0x9E3779B97F4A7C15, xor-shift/multiply mixers 0xBF58476D1CE4E5B9 and
0x94D049BB133111EB with shifts 30/27/31).  Step n of the walk consumes the
n-th uniform of the stream: up if u < p_up(x).

Every reduced statistic is assembled from exact integer sums of the walk
outputs, so merged results are identical for any block size, worker count,
or partitioning of the trajectories, bit for bit.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from . import backend
from .errors import CouplingOutOfRange, InsufficientScales
from .profiles import ConstantCoupling, CouplingProfile, transfer_tables

__all__ = [
    "splitmix64",
    "substream_key",
    "Trajectory",
    "Estimate",
    "EnsembleStats",
    "AutocorrEstimate",
    "HurstEstimate",
    "sample_path",
    "sample_ensemble",
    "terminal_counts",
    "estimate_autocorr",
    "estimate_hurst",
]

_MASK64 = (1 << 64) - 1


def splitmix64(value: int) -> int:
    """One splitmix64 step: mix(value + 0x9E3779B97F4A7C15)."""
    z = (value + 0x9E3779B97F4A7C15) & _MASK64
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def substream_key(seed: int, trajectory_index: int) -> tuple[int, int]:
    """Philox key words for one trajectory's uniform stream."""
    w0 = (seed & _MASK64) ^ splitmix64(trajectory_index)
    return w0, splitmix64(w0)


def _fill_uniforms(out: np.ndarray, seed: int, first_index: int) -> None:
    # row r of `out` gets the uniforms of trajectory first_index + r
    for r in range(out.shape[0]):
        w0, w1 = substream_key(seed, first_index + r)
        gen = np.random.Generator(
            np.random.Philox(key=np.array([w0, w1], dtype=np.uint64))
        )
        gen.random(out=out[r])


def _block_rows(n_steps: int) -> int:
    # ~32 MB of uniforms per block, fixed by n_steps so partitioning is
    # deterministic
    return min(8192, max(64, int(32e6) // (8 * max(1, n_steps))))


def _check_strict(margin: np.ndarray, n_steps: int, strict: bool) -> None:
    if not strict or n_steps <= 0:
        return
    half = (len(margin) - 1) // 2
    lo, hi = half - (n_steps - 1), half + n_steps
    window = margin[lo:hi]
    if window.min() < 0.0:
        bad = np.nonzero(window < 0.0)[0] - (n_steps - 1)
        raise CouplingOutOfRange(int(np.abs(bad).min()))


@dataclass(frozen=True)
class Trajectory:
    """One walk: increments of +-1 and the running displacement."""

    increments: np.ndarray
    displacements: np.ndarray


@dataclass(frozen=True)
class Estimate:
    value: float
    se: float


@dataclass(frozen=True)
class EnsembleStats:
    """Terminal-displacement statistics of an ensemble of walks."""

    n_steps: int
    n_walks: int
    seed: int
    mean: Estimate
    variance: Estimate
    fourth: Estimate
    kurtosis: Estimate
    mean_abs: Estimate


@dataclass(frozen=True)
class AutocorrEstimate:
    """Pooled and per-start-index increment-product averages."""

    lag: int
    n_steps: int
    n_walks: int
    seed: int
    estimate: Estimate
    per_start: np.ndarray
    per_start_se: np.ndarray


@dataclass(frozen=True)
class HurstEstimate:
    """Log-log slope of mean |terminal displacement| vs walk length."""

    h: Estimate
    n_values: np.ndarray
    mean_abs: list[Estimate]


def sample_path(n_steps: int, profile: CouplingProfile, seed: int, *,
                trajectory_index: int = 0, strict: bool = False) -> Trajectory:
    """One trajectory; row trajectory_index of the ensemble with this seed."""
    if n_steps < 0:
        raise ValueError(f"step count must be >= 0, got {n_steps}")
    up, _, margin = transfer_tables(profile, max(1, n_steps))
    _check_strict(margin, n_steps, strict)
    half = (len(up) - 1) // 2
    uniforms = np.empty((1, n_steps), dtype=np.float64)
    _fill_uniforms(uniforms, seed, trajectory_index)
    inc = np.empty(n_steps, dtype=np.int8)
    x = 0
    for s in range(n_steps):
        step = 1 if uniforms[0, s] < up[x + half] else -1
        inc[s] = step
        x += step
    disp = np.zeros(n_steps + 1, dtype=np.int64)
    np.cumsum(inc, out=disp[1:])
    return Trajectory(inc, disp)


def _run_blocks(n_steps, profile, n_walks, seed, kern, n_jobs, reducer):
    """Generate all trajectories block-wise and fold with `reducer`.

    reducer(terminal_block, first_index) must return a tuple of partial
    results that merge by exact integer addition; the merged tuple is
    returned.  Partials are summed in block order but are integers, so the
    result is partition and thread independent.
    """
    up, _, margin = transfer_tables(profile, max(1, n_steps))
    half = (len(up) - 1) // 2
    rows = _block_rows(n_steps)
    starts = list(range(0, n_walks, rows))

    def one_block(start):
        count = min(rows, n_walks - start)
        uniforms = np.empty((count, n_steps), dtype=np.float64)
        _fill_uniforms(uniforms, seed, start)
        terminal = kern.walk_terminal(uniforms, up, half)
        return reducer(terminal, start)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            partials = list(pool.map(one_block, starts))
    else:
        partials = [one_block(s) for s in starts]

    merged = list(partials[0])
    for part in partials[1:]:
        for i, value in enumerate(part):
            merged[i] = merged[i] + value
    return merged


def sample_ensemble(n_steps: int, profile: CouplingProfile, n_walks: int,
                    seed: int, *, strict: bool = False, n_jobs: int = 1,
                    backend_name: str | None = None) -> EnsembleStats:
    """Moment estimates with standard errors from n_walks terminal points.

    Power sums of the integer displacements are taken in exact (unbounded)
    integer arithmetic; estimates and delta-method standard errors are
    ratios of those sums, hence independent of blocking.
    """
    if n_walks < 2:
        raise ValueError(f"need at least 2 walks, got {n_walks}")
    kern = backend.get_kernels(backend_name)
    up, _, margin = transfer_tables(profile, max(1, n_steps))
    _check_strict(margin, n_steps, strict)

    def reducer(terminal, start):
        xl = terminal.tolist()
        s1 = sum(xl)
        s2 = sum(v * v for v in xl)
        s3 = sum(abs(v) ** 3 for v in xl)
        s4 = sum(v ** 4 for v in xl)
        s6 = sum(v ** 6 for v in xl)
        s8 = sum(v ** 8 for v in xl)
        sa = sum(abs(v) for v in xl)
        return s1, s2, s3, s4, s6, s8, sa

    s1, s2, s3, s4, s6, s8, sa = _run_blocks(
        n_steps, profile, n_walks, seed, kern, n_jobs, reducer
    )
    m = n_walks
    mean = s1 / m
    m2 = s2 / m
    m4 = s4 / m
    m6 = s6 / m
    m8 = s8 / m
    mabs = sa / m
    var = m2 - mean * mean
    var_of_x2 = max(m4 - m2 * m2, 0.0)
    var_of_x4 = max(m8 - m4 * m4, 0.0)
    cov_24 = m6 - m2 * m4
    se_mean = math.sqrt(max(var, 0.0) / m)
    se_var = math.sqrt(var_of_x2 / m)
    se_fourth = math.sqrt(var_of_x4 / m)
    if m2 > 0.0:
        kurt = m4 / (m2 * m2)
        g4 = 1.0 / (m2 * m2)
        g2 = -2.0 * m4 / (m2 ** 3)
        kvar = (g4 * g4 * var_of_x4 + g2 * g2 * var_of_x2
                + 2.0 * g4 * g2 * cov_24) / m
        se_kurt = math.sqrt(max(kvar, 0.0))
    else:
        kurt = float("nan")
        se_kurt = float("nan")
    se_mabs = math.sqrt(max(m2 - mabs * mabs, 0.0) / m)
    return EnsembleStats(
        n_steps=n_steps,
        n_walks=m,
        seed=seed,
        mean=Estimate(mean, se_mean),
        variance=Estimate(var, se_var),
        fourth=Estimate(m4, se_fourth),
        kurtosis=Estimate(kurt, se_kurt),
        mean_abs=Estimate(mabs, se_mabs),
    )


def terminal_counts(n_steps: int, profile: CouplingProfile, n_walks: int,
                    seed: int, *, n_jobs: int = 1,
                    backend_name: str | None = None) -> np.ndarray:
    """Histogram of terminal displacements on the lattice, entry k at x=2k-n."""
    kern = backend.get_kernels(backend_name)

    def reducer(terminal, start):
        k = (terminal + n_steps) // 2
        return (np.bincount(k, minlength=n_steps + 1).astype(np.int64),)

    (counts,) = _run_blocks(n_steps, profile, n_walks, seed, kern, 1 if n_jobs <= 1 else n_jobs, reducer)
    return counts


def estimate_autocorr(n_steps: int, profile: CouplingProfile, lag_end: int,
                      n_walks: int, seed: int, *, strict: bool = False,
                      n_jobs: int = 1,
                      backend_name: str | None = None) -> AutocorrEstimate:
    """Average increment product d_{i+1} d_{i+L} pooled over walks and starts.

    The pooled estimate averages each walk's window mean; its standard error
    comes from the spread of those per-walk means (walks are independent;
    within-walk products are not).  per_start[i] is the across-walk average
    at start index i with a Bernoulli-product standard error, for
    stationarity checks.
    """
    if lag_end < 2:
        raise ValueError(f"lag_end must be >= 2, got {lag_end}")
    if n_steps < lag_end:
        raise ValueError(f"need n_steps >= lag_end, got {n_steps} < {lag_end}")
    if n_walks < 2:
        raise ValueError(f"need at least 2 walks, got {n_walks}")
    kern = backend.get_kernels(backend_name)
    up, _, margin = transfer_tables(profile, max(1, n_steps))
    _check_strict(margin, n_steps, strict)
    half = (len(up) - 1) // 2
    rows = _block_rows(n_steps)
    width = n_steps - lag_end + 1

    def one_block(start):
        count = min(rows, n_walks - start)
        uniforms = np.empty((count, n_steps), dtype=np.float64)
        _fill_uniforms(uniforms, seed, start)
        per_walk, per_start, _ = kern.walk_lag_products(uniforms, up, half, lag_end)
        pw = per_walk.tolist()
        return sum(pw), sum(v * v for v in pw), per_start.astype(np.int64)

    starts = list(range(0, n_walks, rows))
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            partials = list(pool.map(one_block, starts))
    else:
        partials = [one_block(s) for s in starts]
    t1 = sum(p[0] for p in partials)
    t2 = sum(p[1] for p in partials)
    per_start_sum = partials[0][2].copy()
    for p in partials[1:]:
        per_start_sum += p[2]

    m = n_walks
    pooled = t1 / (m * width)
    mean_walk = t1 / m
    var_walk = max(t2 / m - mean_walk * mean_walk, 0.0)
    se = math.sqrt(var_walk / m) / width
    per_start_est = per_start_sum / m
    per_start_se = np.sqrt(np.maximum(1.0 - per_start_est**2, 0.0) / m)
    return AutocorrEstimate(
        lag=lag_end - 1,
        n_steps=n_steps,
        n_walks=m,
        seed=seed,
        estimate=Estimate(pooled, se),
        per_start=per_start_est,
        per_start_se=per_start_se,
    )


def estimate_hurst(kappa: float, n_values, n_walks: int, seed: int, *,
                   n_jobs: int = 1,
                   backend_name: str | None = None) -> HurstEstimate:
    """Displacement-growth exponent from a sweep of walk lengths.

    For each n in n_values the coupling is kappa/n and mean |terminal x| is
    estimated with n_walks trajectories (independent sub-seed per n:
    splitmix64(seed XOR splitmix64(n))).  h is the unweighted least-squares
    slope of log mean-|x| against log n, with the standard error propagated
    from the per-size standard errors.
    """
    ns = sorted(int(n) for n in set(n_values))
    if len(ns) < 3 or ns[-1] < 10 * ns[0]:
        raise InsufficientScales(
            f"need >= 3 sizes spanning >= one decade, got {ns}"
        )
    kern = backend.get_kernels(backend_name)
    means = []
    for n in ns:
        child = splitmix64((seed & _MASK64) ^ splitmix64(n))
        profile = ConstantCoupling(kappa / n)

        def reducer(terminal, start):
            xl = terminal.tolist()
            return sum(abs(v) for v in xl), sum(v * v for v in xl)

        sa, s2 = _run_blocks(n, profile, n_walks, child, kern, n_jobs, reducer)
        mabs = sa / n_walks
        se = math.sqrt(max(s2 / n_walks - mabs * mabs, 0.0) / n_walks)
        means.append(Estimate(mabs, se))

    logn = np.log(np.array(ns, dtype=np.float64))
    logy = np.log(np.array([e.value for e in means]))
    sy = np.array([e.se / e.value for e in means])  # se of log via delta
    xc = logn - logn.mean()
    sxx = float(np.dot(xc, xc))
    slope = float(np.dot(xc, logy) / sxx)
    slope_se = float(np.sqrt(np.dot((xc / sxx) ** 2, sy**2)))
    return HurstEstimate(
        h=Estimate(slope, slope_se),
        n_values=np.array(ns, dtype=np.int64),
        mean_abs=means,
    )
