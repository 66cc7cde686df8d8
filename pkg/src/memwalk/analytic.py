"""Closed-form generating function, cumulants, and increment correlation.

All generating-function work is exact rational arithmetic: the alternating
inner sums cancel catastrophically in floating point, and the whole point of
this module is bit-for-bit agreement with the rational lattice oracle.
Float entry points exist only for quantities that are themselves
well-conditioned (variance growth, correlation values).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from math import comb, factorial

import numpy as np

from .errors import DegenerateDenominator, SingularEvaluationPoint

__all__ = [
    "AutocorrResult",
    "z_closed_eval",
    "z_dp_eval",
    "z_gaussian_limit",
    "variance_exact",
    "fourth_exact",
    "variance_series",
    "fourth_series",
    "kurtosis_limit",
    "variance_growth_limit",
    "autocorrelation",
    "autocorr_per_start",
    "hurst_amplitude",
    "hurst_h",
]


def z_gaussian_limit(n_steps: int, q) -> Fraction:
    """Generating function of the uncoupled walk: ((q + 1/q)/2)**n."""
    qq = Fraction(q)
    if qq == 0:
        raise SingularEvaluationPoint("q=0")
    return (qq * qq + 1) ** n_steps / (2 * qq) ** n_steps


def z_dp_eval(weights, q) -> Fraction:
    """Laurent-polynomial evaluation sum_k weights[k] * q**(2k - n).

    weights are the level-n lattice weights (n = len - 1), typically from
    lattice.evolve_rational.  Float weights are converted exactly, so this is
    also a bit-exact functional of a float lattice.
    """
    qq = Fraction(q)
    if qq == 0:
        raise SingularEvaluationPoint("q=0")
    n = len(weights) - 1
    q2 = qq * qq
    acc = Fraction(0)
    for w in reversed(list(weights)):
        acc = acc * q2 + Fraction(w)
    return acc / qq**n


def _inner_sum(n_steps, k, w2_pows, a_pow):
    # sum_i (-1)^(i+k) C(k,i) (2i-k)^n w^(2i), times (q + 1/q + 2)^k
    s = Fraction(0)
    for i in range(k + 1):
        term = comb(k, i) * (2 * i - k) ** n_steps * w2_pows[i]
        s = s - term if (i + k) % 2 else s + term
    return s * a_pow


def _prod_except(factors):
    # exc[i] = product of factors[m] for m != i
    n = len(factors)
    pre = [Fraction(1)] * (n + 1)
    for i in range(n):
        pre[i + 1] = pre[i] * factors[i]
    suf = [Fraction(1)] * (n + 1)
    for i in range(n - 1, -1, -1):
        suf[i] = suf[i + 1] * factors[i]
    return [pre[i] * suf[i + 1] for i in range(n)]


def z_closed_eval(n_steps: int, epsilon, q, *, form: str = "distributed") -> Fraction:
    """Closed-form generating function of the constant-coupling walk.

    Exact rational evaluation; raises SingularEvaluationPoint for
    q in {0, -1, +1} (poles / trivial point of the rational expression).
    epsilon = 0 dispatches to the uncoupled formula.

    form="distributed" (default) multiplies the shared prefactor through the
    k-sum, turning each term into a polynomial in epsilon: term k carries
    prod_{j != k} (1 + 2*eps*j), so couplings where some 1 + 2*eps*k = 0 are
    evaluated at the (removable) singularity instead of dividing by zero.
    form="literal" keeps the prefactor * sum-of-quotients arrangement and
    raises DegenerateDenominator at those couplings.
    """
    if n_steps < 0:
        raise ValueError(f"step count must be >= 0, got {n_steps}")
    qq = Fraction(q)
    if qq in (0, 1, -1):
        raise SingularEvaluationPoint(f"q={q} is a singular evaluation point")
    if n_steps == 0:
        return Fraction(1)
    eps = Fraction(epsilon)
    if eps == 0:
        return z_gaussian_limit(n_steps, qq)

    w = (1 - qq) / (1 + qq)
    a = qq + 1 / qq + 2
    w2 = w * w
    w2_pows = [Fraction(1)]
    a_pows = [Fraction(1)]
    for _ in range(n_steps):
        w2_pows.append(w2_pows[-1] * w2)
        a_pows.append(a_pows[-1] * a)
    quarter = Fraction(1, 4)

    if form == "distributed":
        factors = [1 + 2 * eps * j for j in range(1, n_steps + 1)]
        exc = _prod_except(factors)
        total = Fraction(0)
        for k in range(1, n_steps + 1):
            total += (exc[k - 1] * comb(n_steps, k) * quarter**k
                      * _inner_sum(n_steps, k, w2_pows, a_pows[k]))
        return total / factorial(n_steps)

    if form == "literal":
        inv2e = 1 / (2 * eps)
        for k in range(1, n_steps + 1):
            if inv2e + k == 0:
                raise DegenerateDenominator(
                    f"1/(2*eps) + {k} = 0 at eps={eps}"
                )
        gen_binom = Fraction(1)
        for j in range(1, n_steps + 1):
            gen_binom *= inv2e + j
        gen_binom /= factorial(n_steps)
        total = Fraction(0)
        for k in range(1, n_steps + 1):
            total += (comb(n_steps, k) * quarter**k
                      * _inner_sum(n_steps, k, w2_pows, a_pows[k]) / (inv2e + k))
        return (2 * eps) ** (n_steps - 1) * gen_binom * total

    raise ValueError(f"unknown form {form!r}")


def _moment_sums(n_steps: int, eps: Fraction):
    # second and fourth moments from the q-derivatives of the distributed
    # form at q=1; every term is a polynomial in eps, so degenerate
    # couplings evaluate cleanly
    n = n_steps
    factors = [1 + 2 * eps * j for j in range(1, n + 1)]
    exc = _prod_except(factors)
    var = Fraction(0)
    fou = Fraction(0)
    for k in range(1, n + 1):
        pe = exc[k - 1] * comb(n, k)
        sgn = -1 if k % 2 else 1
        p2 = (2 - k) ** n
        p4 = (4 - k) ** n
        p0 = (-k) ** n
        var += sgn * pe * k * Fraction(p0 - p2, 2)
        brace = -4 * p2 + 3 * p4 + p0 + 3 * k * (2 * p2 - p4 - p0)
        fou += -sgn * pe * Fraction(k, 4) * brace
    f = factorial(n)
    return var / f, fou / f


def variance_exact(n_steps: int, epsilon) -> Fraction:
    """Exact second moment of the constant-coupling walk after n steps."""
    if n_steps == 0:
        return Fraction(0)
    var, _ = _moment_sums(n_steps, Fraction(epsilon))
    return var


def fourth_exact(n_steps: int, epsilon) -> Fraction:
    """Exact fourth moment of the constant-coupling walk after n steps."""
    if n_steps == 0:
        return Fraction(0)
    _, fou = _moment_sums(n_steps, Fraction(epsilon))
    return fou


def variance_series(n_steps: int, epsilon: float) -> float:
    """Second moment truncated at order eps**2:  N + 4 C(N,2) eps + 16 C(N,3) eps**2."""
    n = n_steps
    return float(n + 4 * comb(n, 2) * epsilon + 16 * comb(n, 3) * epsilon**2)


def fourth_series(n_steps: int, epsilon: float) -> float:
    """Fourth moment truncated at order eps**2.

    N(3N-2) + 8 C(N,2) (3N-4) eps + 56 C(N,3) (3N - 43/7) eps**2.
    """
    n = n_steps
    c2 = 56 * comb(n, 3) * (Fraction(3) * n - Fraction(43, 7))
    return float(n * (3 * n - 2) + 8 * comb(n, 2) * (3 * n - 4) * epsilon
                 + float(c2) * epsilon**2)


def kurtosis_limit(kappa: float) -> float:
    """Large-N kurtosis at fixed renormalized coupling kappa.

    The kappa and kappa**2 terms of the large-N expansion cancel; in fact the
    limit of fourth/variance**2 is exactly 3 for every |kappa| <= 1/2, since
    both moments grow like the square of the same exponential factor.
    """
    if abs(kappa) > 0.5:
        raise ValueError(f"|kappa| must be <= 1/2, got {kappa}")
    return 3.0


def variance_growth_limit(kappa: float) -> float:
    """Large-N limit of variance/N at eps = kappa/N:  (e**(4k) - 1)/(4k)."""
    if kappa == 0.0:
        return 1.0
    return math.expm1(4.0 * kappa) / (4.0 * kappa)


def _variance_float(n, eps: float) -> float:
    # closed solution of v_{m+1} = v_m (1 + 4 eps) + 1:  ((1+4e)^n - 1)/(4e)
    if eps == 0.0:
        return float(n)
    base = 1.0 + 4.0 * eps
    if base > 0.0:
        return math.expm1(n * math.log1p(4.0 * eps)) / (4.0 * eps)
    return (base**n - 1.0) / (4.0 * eps)


@dataclass(frozen=True)
class AutocorrResult:
    """Expected product of two increments lag_end - 1 steps apart.

    value_exact averages the exact per-start expectations over every
    admissible start position (matching how a trajectory estimator pools
    them); value_leading is the large-N form 2*kappa/N * (1 + 2*H*kappa)
    with H = hurst_amplitude(kappa).
    """

    lag: int
    value_exact: float
    value_leading: float
    hurst_amplitude: float


def autocorr_per_start(n_steps: int, kappa: float, lag_end: int) -> np.ndarray:
    """Exact E[dS_{i+1} * dS_{i+L}] for each start i = 0..n_steps-L.

    L = lag_end.  With eps = kappa/n_steps and v_i the exact second moment
    after i steps, the expectation is 2 eps (1+2 eps)^(L-2) (1 + 2 eps v_i).
    The i-dependence through v_i is what the stationarity claim neglects;
    it is O(eps^2) overall but not zero.
    """
    if lag_end < 2:
        raise ValueError(f"lag_end must be >= 2, got {lag_end}")
    if n_steps < lag_end:
        raise ValueError(f"need n_steps >= lag_end, got {n_steps} < {lag_end}")
    eps = kappa / n_steps
    starts = np.arange(n_steps - lag_end + 1, dtype=np.float64)
    if eps == 0.0:
        return np.zeros_like(starts)
    base = 1.0 + 4.0 * eps
    if base > 0.0:
        v = np.expm1(starts * math.log1p(4.0 * eps)) / (4.0 * eps)
    else:
        v = (base**starts - 1.0) / (4.0 * eps)
    return 2.0 * eps * (1.0 + 2.0 * eps) ** (lag_end - 2) * (1.0 + 2.0 * eps * v)


def autocorrelation(n_steps: int, kappa: float, lag_end: int) -> AutocorrResult:
    """Increment autocorrelation at lag lag_end - 1 for eps = kappa/n_steps."""
    per_start = autocorr_per_start(n_steps, kappa, lag_end)
    h = hurst_amplitude(kappa)
    leading = 2.0 * kappa / n_steps * (1.0 + 2.0 * h * kappa)
    return AutocorrResult(
        lag=lag_end - 1,
        value_exact=float(per_start.mean()),
        value_leading=leading,
        hurst_amplitude=h,
    )


def hurst_amplitude(kappa: float) -> float:
    """Displacement-growth amplitude H in dx ~ 2 sqrt(N H):  1 + 2k + (8/3)k**2."""
    return 1.0 + 2.0 * kappa + (8.0 / 3.0) * kappa * kappa


def hurst_h(kappa: float) -> float:
    """Displacement-growth exponent h in dx ~ 2 N**h.

    H is independent of N (the coupling only rescales the amplitude), so the
    symbolic log-log slope is 1/2 for every admissible kappa, not only the
    uncoupled case.  The sampling module estimates the same exponent by
    regression as an empirical cross-check.
    """
    if abs(kappa) > 0.5:
        raise ValueError(f"|kappa| must be <= 1/2, got {kappa}")
    return 0.5
