"""Coupling profiles: how the per-step drift strength depends on displacement.

A walker at displacement x steps +1 with probability 1/2 + x*eps(x) and -1
with probability 1/2 - x*eps(x).  The profile supplies eps(x).  Both profiles
are even in x, so the drift term x*eps(x) is odd and every induced
distribution is symmetric about the origin.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import CouplingOutOfRange

__all__ = [
    "ConstantCoupling",
    "GaussianWellCoupling",
    "CouplingProfile",
    "transfer_probabilities",
    "transfer_tables",
]


@dataclass(frozen=True)
class ConstantCoupling:
    """State-independent coupling strength."""

    epsilon: float

    def effective(self, x):
        """Coupling at displacement x (same value everywhere)."""
        if isinstance(x, np.ndarray):
            return np.full_like(x, float(self.epsilon), dtype=np.float64)
        return self.epsilon

    def effective_exact(self, x: int) -> Fraction:
        return Fraction(self.epsilon)


@dataclass(frozen=True)
class GaussianWellCoupling:
    """Coupling eps*(b - exp(-x^2 / (2*delta^2))).

    Negative inside the central well of half-width ~delta (for b < 1) and
    positive far from the origin, so a trajectory is pulled back while it
    stays near the center but self-reinforces once it has escaped.  delta is
    measured in lattice displacement units.
    """

    epsilon: float
    b: float
    delta: float

    def __post_init__(self):
        if not self.b > 0:
            raise ValueError(f"b must be > 0, got {self.b}")
        if not self.delta > 0:
            raise ValueError(f"delta must be > 0, got {self.delta}")

    def effective(self, x):
        if isinstance(x, np.ndarray):
            well = np.exp(-(x * x) / (2.0 * self.delta * self.delta))
        else:
            well = math.exp(-(x * x) / (2.0 * self.delta * self.delta))
        return self.epsilon * (self.b - well)


CouplingProfile = ConstantCoupling | GaussianWellCoupling


def transfer_probabilities(x: int, profile: CouplingProfile, *, clamp: bool = True):
    """Up/down step probabilities from displacement x.

    Returns (p_up, p_down) with p_up + p_down == 1 exactly.  With clamping
    disabled, raises CouplingOutOfRange when |x * eps(x)| > 1/2.
    """
    t = x * profile.effective(x)
    if abs(t) > 0.5:
        if not clamp:
            raise CouplingOutOfRange(x)
        p_up = 1.0 if t > 0 else 0.0
    else:
        p_up = 0.5 + t
    return p_up, 1.0 - p_up


def transfer_tables(profile: CouplingProfile, half_width: int):
    """Tabulate step probabilities for every displacement in [-H, H].

    Returns (up, down, margin) float64 arrays of length 2*half_width + 1,
    indexed by x + half_width.  up[i] and down[i] are the clamped step
    probabilities; margin[i] = 1/2 - |x*eps(x)| is the unclamped distance of
    either probability from the [0, 1] boundary (negative means the raw value
    was out of range and got clamped).

    up and down are built so that down at -x is bit-identical to up at +x,
    which makes the lattice propagation exactly mirror-symmetric.
    """
    x = np.arange(-half_width, half_width + 1, dtype=np.float64)
    t = x * profile.effective(x)
    margin = 0.5 - np.abs(t)
    up = np.clip(0.5 + t, 0.0, 1.0)
    down = np.clip(0.5 - t, 0.0, 1.0)
    return up, down, margin
