"""Estimating iteration-matrix eigenvalue bounds (b1, bN).

Two routes: Fourier smoothing analysis for damped Jacobi on the 5-point
Laplacian (cheap, analytic, high-frequency modes only), and power-method
estimation on an arbitrary affine sweep (works for anything, including
cycles whose iteration matrices are not accessible as matrices).
"""

from __future__ import annotations

import dataclasses
import math
from typing import Optional

import numpy as np

from .solvers import StationarySweep


@dataclasses.dataclass(frozen=True)
class SymbolRange:
    """Extremes of a relaxation symbol over the high-frequency set."""

    b1_hat: float
    bN_hat: float

    def __post_init__(self):
        if self.b1_hat > self.bN_hat:
            raise ValueError("b1_hat must not exceed bN_hat")

    @property
    def smoothing_factor(self) -> float:
        return max(abs(self.b1_hat), abs(self.bN_hat))


def jacobi_symbol(omega: float, theta: tuple) -> float:
    """Fourier symbol of damped Jacobi on the 5-point Laplacian.

    S(theta; omega) = 1 - omega + (omega/2)(cos theta1 + cos theta2).
    """
    if not (0.0 < omega <= 1.0):
        raise ValueError("omega must be in (0, 1]")
    t1, t2 = theta
    return 1.0 - omega + 0.5 * omega * (math.cos(t1) + math.cos(t2))


def smoothing_range(omega: float, resolution: int = 257, power: int = 1) -> SymbolRange:
    """Extremes of the Jacobi symbol (to the given power) over high frequencies.

    The high-frequency set is {theta in [0, pi]^2 : max(theta) >= pi/2}; its
    extreme points (pi, pi) and (pi/2, 0) land exactly on the sample grid
    (resolution is rounded up to the next odd value to guarantee that), so
    the returned extremes are exact for power 1. Powers > 1 give the
    per-cycle prediction for nu1 + nu2 = power relaxations.
    """
    if resolution < 64:
        raise ValueError("resolution must be >= 64")
    if power < 1:
        raise ValueError("power must be >= 1")
    if not (0.0 < omega <= 1.0):
        raise ValueError("omega must be in (0, 1]")
    res = resolution | 1
    ax = np.linspace(0.0, math.pi, res)
    T1, T2 = np.meshgrid(ax, ax, indexing="ij")
    S = 1.0 - omega + 0.5 * omega * (np.cos(T1) + np.cos(T2))
    hf = np.maximum(T1, T2) >= math.pi / 2.0 - 1e-12
    vals = S[hf] ** power
    return SymbolRange(b1_hat=float(vals.min()), bN_hat=float(vals.max()))


@dataclasses.dataclass(frozen=True)
class PowerEstimate:
    """Extreme eigenvalue estimates of a sweep's error propagator.

    ``complex_dominant`` is set when the iterate direction kept rotating
    instead of settling, i.e. the dominant eigenvalue is (numerically) a
    complex pair; ``dominant`` is then its magnitude, sign unknown.
    """

    dominant: float
    opposite: float
    complex_dominant: bool


def power_extreme_eigs(sweep: StationarySweep, dim: int, iters: int = 100,
                       shift: Optional[float] = None, seed: int = 0) -> PowerEstimate:
    """Power-method estimates of the extreme eigenvalues of a sweep's propagator.

    The error propagator of an affine sweep is E(v) = sweep(v, 0) - sweep(0, 0),
    linear in v. The dominant estimate is a signed Rayleigh quotient once the
    iterate direction has settled (|<v_k, v_{k-1}>| -> 1); if it has not
    settled after `iters` steps the dominant eigenvalue is flagged complex
    and reported by magnitude (geometric mean growth over the last quarter).
    The opposite-end estimate repeats the procedure on E - mu I and adds mu
    back, with mu defaulting to the dominant estimate.
    """
    if iters < 20:
        raise ValueError("iters must be >= 20")
    zero = np.zeros(dim)
    s0 = sweep.sweep(zero, zero)

    def propagate(v: np.ndarray) -> np.ndarray:
        return sweep.sweep(v, zero) - s0

    dominant, aligned, magnitude = _power_iterate(propagate, dim, iters, seed)
    complex_dominant = not aligned
    dom_value = dominant if aligned else magnitude

    mu = shift if shift is not None else dom_value

    def shifted(v: np.ndarray) -> np.ndarray:
        return propagate(v) - mu * v

    opp_rayleigh, opp_aligned, opp_mag = _power_iterate(shifted, dim, iters, seed + 1)
    opposite = (opp_rayleigh if opp_aligned else -opp_mag) + mu
    return PowerEstimate(dominant=dom_value, opposite=opposite,
                         complex_dominant=complex_dominant)


def _power_iterate(apply_fn, dim: int, iters: int, seed: int):
    """(rayleigh, direction_settled, magnitude) of the dominant eigenvalue."""
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(dim)
    v /= np.linalg.norm(v)
    rayleigh = 0.0
    align = 0.0
    logs = []
    for _ in range(iters):
        w = apply_fn(v)
        g = float(np.linalg.norm(w))
        if g == 0.0:
            return 0.0, True, 0.0
        rayleigh = float(np.dot(v, w))
        logs.append(math.log(g))
        w = w / g
        align = abs(float(np.dot(v, w)))
        v = w
    magnitude = math.exp(float(np.mean(logs[-max(1, iters // 4):])))
    settled = align >= 1.0 - 1e-6
    return rayleigh, settled, magnitude
