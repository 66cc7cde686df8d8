"""Exact propagation of the displacement distribution on the step lattice.

This is the ground-truth engine: starting from all mass at the origin, the
distribution after n steps lives on x in {-n, -n+2, ..., n} and is advanced
one step at a time with the state-dependent up/down probabilities from a
coupling profile.  Everything else in the package is validated against it.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import backend
from .errors import CouplingOutOfRange, DegeneratePdf
from .profiles import ConstantCoupling, CouplingProfile, transfer_tables

__all__ = [
    "LatticePdf",
    "ValidityReport",
    "MomentReport",
    "ConvergencePoint",
    "evolve",
    "evolve_rational",
    "second_moment_history",
    "moments",
    "kurtosis_study",
]


@dataclass(frozen=True)
class LatticePdf:
    """Distribution after n steps; probs[k] is the mass at x = 2k - n."""

    n: int
    probs: np.ndarray

    @property
    def displacements(self) -> np.ndarray:
        return np.arange(-self.n, self.n + 1, 2, dtype=np.int64)

    def prob_at(self, x: int) -> float:
        """Mass at displacement x; 0 off the parity lattice."""
        if abs(x) > self.n or (x + self.n) % 2 != 0:
            return 0.0
        return float(self.probs[(x + self.n) // 2])


@dataclass(frozen=True)
class ValidityReport:
    """Whether any transfer probability left [0, 1] during propagation.

    worst_margin is the minimum over reachable (step, x) of 1/2 - |x*eps(x)|;
    clamped_mass is the total probability that sat on a clamped site at the
    moment its outgoing step was taken; first_violation_x is the smallest |x|
    clamped at the earliest affected step (None when clean).
    """

    valid: bool
    worst_margin: float
    first_violation_x: int | None
    clamped_mass: float


@dataclass(frozen=True)
class MomentReport:
    """Centered lattice moments; fourth/kurtosis present when order >= 4."""

    mean: float
    variance: float
    fourth: float | None = None
    kurtosis: float | None = None


@dataclass(frozen=True)
class ConvergencePoint:
    n: int
    variance_over_n: float
    kurtosis: float


def _reachable_margin(margin: np.ndarray, n_steps: int) -> float:
    # sources at step n have |x| <= n-1, so the static window is |x| <= N-1
    half = (len(margin) - 1) // 2
    if n_steps <= 0:
        return float(margin[half])
    lo = half - (n_steps - 1)
    hi = half + (n_steps - 1) + 1
    return float(margin[lo:hi].min())


def _run(n_steps, profile, strict, want_m2, backend_name=None):
    if n_steps < 0:
        raise ValueError(f"step count must be >= 0, got {n_steps}")
    kern = backend.get_kernels(backend_name)
    up, down, margin = transfer_tables(profile, n_steps)
    static_margin = _reachable_margin(margin, n_steps)
    may_clamp = static_margin < 0.0

    probs, m2_hist, worst, clamped, first_x, violated = kern.dp_evolve(
        up, down, margin, n_steps, may_clamp, strict, want_m2
    )
    if violated:
        raise CouplingOutOfRange(first_x)
    if not may_clamp:
        worst = static_margin
    first = int(first_x) if first_x >= 0 else None
    valid = clamped == 0.0 and worst >= 0.0
    report = ValidityReport(valid, float(worst), first, float(clamped))
    return LatticePdf(n_steps, probs), report, m2_hist


def evolve(n_steps: int, profile: CouplingProfile, *, strict: bool = False,
           backend_name: str | None = None):
    """Propagate n_steps steps from a point mass at the origin.

    Returns (LatticePdf, ValidityReport).  Out-of-range transfer
    probabilities are clamped to the [0, 1] boundary with their mass recorded
    in the report; with strict=True they raise CouplingOutOfRange instead.
    """
    pdf, report, _ = _run(n_steps, profile, strict, False, backend_name)
    return pdf, report


def second_moment_history(n_steps: int, profile: CouplingProfile, *,
                          strict: bool = False,
                          backend_name: str | None = None) -> np.ndarray:
    """Second moment of the distribution after each step 0..n_steps."""
    _, _, m2 = _run(n_steps, profile, strict, True, backend_name)
    return m2


def evolve_rational(n_steps: int, epsilon) -> list[Fraction]:
    """Exact-rational propagation for a constant coupling.

    Returns the level-n_steps weights as Fractions, entry k at x = 2k - n.
    No validity clamping is applied: the recurrence is run as plain algebra,
    so couplings whose transfer weights leave [0, 1] still evaluate (the
    weights are then a signed measure, not probabilities).  Used for exact
    generating-function checks, where only the algebraic identity matters.
    """
    if n_steps < 0:
        raise ValueError(f"step count must be >= 0, got {n_steps}")
    eps = Fraction(epsilon)
    half = Fraction(1, 2)
    old = [Fraction(1)]
    for n in range(1, n_steps + 1):
        up = [half + (2 * j - (n - 1)) * eps for j in range(n)]
        new = [old[0] * (1 - up[0])]
        for k in range(1, n):
            new.append(old[k] * (1 - up[k]) + old[k - 1] * up[k - 1])
        new.append(old[n - 1] * up[n - 1])
        old = new
    return old


def moments(pdf: LatticePdf, max_order: int = 4) -> MomentReport:
    """Centered moments of a lattice distribution.

    The mean is subtracted even though symmetric profiles give mean 0, so the
    report stays correct for any future asymmetric rule.  Kurtosis is
    fourth / variance**2; requesting it for a zero-variance distribution
    (only n=0) raises DegeneratePdf.
    """
    if max_order < 2:
        raise ValueError(f"max_order must be >= 2, got {max_order}")
    x = pdf.displacements.astype(np.float64)
    p = pdf.probs
    mean = float(np.dot(p, x))
    xc = x - mean
    sq = xc * xc
    variance = float(np.dot(p, sq))
    if max_order < 4:
        return MomentReport(mean, variance)
    fourth = float(np.dot(p, sq * sq))
    if variance == 0.0:
        raise DegeneratePdf(f"variance is 0 at n={pdf.n}; kurtosis undefined")
    kurtosis = fourth / (variance * variance)
    return MomentReport(mean, variance, fourth, kurtosis)


def kurtosis_study(n_values, kappa: float, *, strict: bool = False,
                   backend_name: str | None = None) -> list[ConvergencePoint]:
    """Sweep step counts at fixed renormalized coupling eps = kappa/n.

    Deterministic (no sampling); each row holds (n, variance/n, kurtosis).
    """
    out = []
    for n in n_values:
        n = int(n)
        if n < 2:
            raise ValueError(f"study needs n >= 2, got {n}")
        pdf, _ = evolve(n, ConstantCoupling(kappa / n), strict=strict,
                        backend_name=backend_name)
        rep = moments(pdf)
        out.append(ConvergencePoint(n, rep.variance / n, rep.kurtosis))
    return out
