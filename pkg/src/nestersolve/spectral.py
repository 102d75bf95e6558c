"""Optimal fixed momentum coefficients for stationary linear iterations.

A stationary iteration x_{k+1} = B x_k + f with real iteration-matrix
eigenvalues b_i in [b1, bN], -1 < b1 <= bN < 1, can be accelerated with a
fixed momentum coefficient c:

    x_{k+1} = B((1+c) x_k - c x_{k-1}) + f.

Each eigenvalue b of B contributes the two roots of the scalar quadratic
lambda^2 - (1+c) b lambda + c b = 0 to the error propagator, so the
asymptotic convergence factor (ACF) of the accelerated scheme is the
maximum root modulus over the spectrum. This module provides the closed
form for the optimal c (and the resulting ACF r*), its robustness region
for complex eigenvalues, the restricted-information Chebyshev baseline
(which knows only b1 and bN, not an enclosing ellipse) and brute-force
oracles used to cross-check every formula.

The optimum has three regimes, determined by the position of the interval
relative to the lines bN = -3 b1 and bN = -b1/3:

* Top (bN >= -3 b1): the positive endpoint governs; c* makes bN the
  critical point of its quadratic, r* = 1 - sqrt(1 - bN).
* Bot (bN <= -b1/3): mirror case, governed by b1; r* = sqrt(1 - b1) - 1.
* Mid: both endpoints bind, c* balances their rates.

The bound interval may extend to -3 < b1 <= -1 (a plainly divergent
iteration that the momentum scheme still converges for); bounds then carry
``extended=True``.
"""

from __future__ import annotations

import dataclasses
import enum
import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import IO, Iterator, List, Sequence, Union

import numpy as np

from .linalg import spectral_radius_estimate, DivergentMapError


class BoundsError(ValueError):
    """Spectrum bounds violate -3 < b1 <= bN < 1 (or a stricter precondition)."""


class CoefficientDomainError(ValueError):
    """Scalar argument outside the formula's domain."""


@dataclasses.dataclass(frozen=True)
class SpectrumBounds:
    """Extreme real eigenvalues (b1, bN) of an iteration matrix.

    ``extended`` is True when b1 <= -1: the unaccelerated iteration
    diverges, but the momentum formulas below remain valid down to
    b1 > -3.
    """

    b1: float
    bN: float

    def __post_init__(self):
        if not (math.isfinite(self.b1) and math.isfinite(self.bN)):
            raise BoundsError("bounds must be finite")
        if not (-3.0 < self.b1 <= self.bN < 1.0):
            raise BoundsError(
                "bounds must satisfy -3 < b1 <= bN < 1, got (%g, %g)" % (self.b1, self.bN)
            )

    @property
    def extended(self) -> bool:
        return self.b1 <= -1.0

    @property
    def plain_radius(self) -> float:
        """Spectral radius bound max(|b1|, bN) of the unaccelerated iteration."""
        return max(abs(self.b1), self.bN)


class Regime(enum.Enum):
    TOP = "top"
    MID = "mid"
    BOT = "bot"


@dataclasses.dataclass(frozen=True)
class OptimalAcceleration:
    """Optimal momentum coefficient and its guarantees for given bounds."""

    bounds: SpectrumBounds
    c_star: float
    r_star: float
    regime: Regime
    robustness_radius: float

    @property
    def extended(self) -> bool:
        return self.bounds.extended


@dataclasses.dataclass(frozen=True)
class ChebyshevParams:
    """Restricted-information Chebyshev parameters for bounds (b1, bN).

    The scheme is x_1 = gamma*sweep(x_0) + (1-gamma)*x_0 and
    x_{k+1} = beta_{k+1} (gamma*sweep(x_k) + (1-gamma)*x_k) + (1-beta_{k+1}) x_{k-1},
    with beta_1 = 1, beta_2 = 1/(1 - sigma^2/2), beta_{k+1} = 1/(1 - sigma^2 beta_k / 4).
    """

    gamma: float
    sigma: float

    def beta_sequence(self) -> Iterator[float]:
        """Yields beta_1, beta_2, beta_3, ... indefinitely."""
        yield 1.0
        beta = 1.0 / (1.0 - self.sigma**2 / 2.0)
        while True:
            yield beta
            beta = 1.0 / (1.0 - self.sigma**2 * beta / 4.0)

    @property
    def beta_limit(self) -> float:
        return 2.0 / (1.0 + math.sqrt(1.0 - self.sigma**2))


def critical_b(c: float) -> float:
    """The b at which the momentum quadratic's discriminant vanishes: 4c/(1+c)^2."""
    if c == -1.0:
        raise CoefficientDomainError("critical_b undefined at c = -1")
    return 4.0 * c / (1.0 + c) ** 2


def critical_c(b: float) -> float:
    """The c that makes b the critical point of its quadratic.

    Returns (1 - sqrt(1-b)) / (1 + sqrt(1-b)); monotone increasing in b,
    with range (-3 + 2*sqrt(2), 1) over b in (-3, 1) and critical_c(0) = 0.
    """
    if b >= 1.0:
        raise CoefficientDomainError("critical_c requires b < 1")
    s = math.sqrt(1.0 - b)
    return (1.0 - s) / (1.0 + s)


def rate_real(c: float, b: float) -> float:
    """Asymptotic factor contributed by a real eigenvalue b under momentum c.

    Max modulus of the roots of lambda^2 - (1+c) b lambda + c b = 0. When b
    and c share a sign and 0 < |b| < |critical_b(c)| the roots are a complex
    pair with modulus sqrt(c b); otherwise the max-modulus root is real.
    """
    if abs(c) >= 1.0:
        raise CoefficientDomainError("rate_real requires |c| < 1")
    if b == 0.0:
        return 0.0
    if c != 0.0 and (b > 0) == (c > 0) and abs(b) < abs(critical_b(c)):
        return math.sqrt(c * b)
    disc = (1.0 + c) ** 2 * b * b - 4.0 * c * b
    # disc >= 0 outside the complex-pair branch; clip fp dust at the boundary
    root = math.sqrt(max(disc, 0.0))
    return 0.5 * abs((1.0 + c) * b + math.copysign(root, b))


def rate_complex(c: float, b: complex) -> float:
    """Asymptotic factor contributed by a complex eigenvalue b under momentum c."""
    if abs(c) >= 1.0:
        raise CoefficientDomainError("rate_complex requires |c| < 1")
    return float(_rate_complex_grid(c, np.asarray(b, dtype=np.complex128)))


def _rate_complex_grid(c: float, b: np.ndarray) -> np.ndarray:
    """Vectorized max root modulus of lambda^2 - (1+c) b lambda + c b."""
    d = np.sqrt((1.0 + c) ** 2 * b * b - 4.0 * c * b + 0j)
    half = 0.5 * (1.0 + c) * b
    return np.maximum(np.abs(half + 0.5 * d), np.abs(half - 0.5 * d))


def regime_classify(bounds: SpectrumBounds) -> Regime:
    """Which endpoint(s) govern the optimum; ties go to Top/Bot (formulas coincide)."""
    if bounds.bN >= -3.0 * bounds.b1:
        return Regime.TOP
    if bounds.bN <= -bounds.b1 / 3.0:
        return Regime.BOT
    return Regime.MID


def optimal_coefficient(bounds: SpectrumBounds) -> OptimalAcceleration:
    """Optimal fixed momentum coefficient c*, its ACF r*, and robustness radius.

    The robustness radius is the largest disk about the origin such that any
    additional complex eigenvalues of the iteration matrix inside it leave
    the guaranteed factor r* intact.
    """
    regime = regime_classify(bounds)
    b1, bN = bounds.b1, bounds.bN
    if regime is Regime.TOP:
        g = bN
        c = critical_c(g)
        r = 1.0 - math.sqrt(1.0 - bN)
        radius = bN / 3.0
    elif regime is Regime.BOT:
        g = b1
        c = critical_c(g)
        r = math.sqrt(1.0 - b1) - 1.0
        radius = -b1 / 3.0
    else:
        g = -8.0 * bN * b1 * (b1 + bN) / (b1 - bN) ** 2
        c = critical_c(g)
        r = rate_real(c, bN)
        radius = min(abs(b1), abs(bN))
    return OptimalAcceleration(bounds=bounds, c_star=c, r_star=r, regime=regime,
                               robustness_radius=radius)


def acceleration_ratio(bounds: SpectrumBounds) -> float:
    """Iteration-count speedup of the optimal momentum scheme, log r* / log rho(B).

    Requires the unaccelerated iteration to converge: rho(B) = max(|b1|, bN)
    in (0, 1).
    """
    rho = bounds.plain_radius
    if rho >= 1.0:
        raise BoundsError("unaccelerated divergent; AR undefined")
    if rho == 0.0:
        raise BoundsError("rho(B) = 0; AR undefined")
    r = optimal_coefficient(bounds).r_star
    return math.log(r) / math.log(rho)


def companion_rate_oracle(c: float, spectrum: Sequence[complex], iters: int = 2000,
                          seed: int = 0) -> float:
    """Brute-force ACF of the momentum scheme for an explicit spectrum.

    Realizes the given eigenvalues as a real block-diagonal B (a 2x2 rotation
    block per strictly-complex entry, realizing the conjugate pair), assembles
    the one-step companion matrix

        [[(1+c) B, -c B],
         [   I,      0 ]]

    and estimates its spectral radius by norm growth. Independent of every
    closed-form rate above; used only as a test oracle.
    """
    if abs(c) >= 1.0:
        raise CoefficientDomainError("companion_rate_oracle requires |c| < 1")
    blocks: List[np.ndarray] = []
    for z in spectrum:
        z = complex(z)
        if z.imag == 0.0:
            blocks.append(np.array([[z.real]]))
        else:
            blocks.append(np.array([[z.real, z.imag], [-z.imag, z.real]]))
    n = sum(b.shape[0] for b in blocks)
    B = np.zeros((n, n))
    at = 0
    for blk in blocks:
        m = blk.shape[0]
        B[at:at + m, at:at + m] = blk
        at += m
    G = np.zeros((2 * n, 2 * n))
    G[:n, :n] = (1.0 + c) * B
    G[:n, n:] = -c * B
    G[n:, :n] = np.eye(n)
    return spectral_radius_estimate(lambda v: G @ v, 2 * n, iters=iters, seed=seed)


def chebyshev_parameters(bounds: SpectrumBounds) -> ChebyshevParams:
    """Restricted-information Chebyshev parameters for a real interval [b1, bN]."""
    if bounds.b1 <= -1.0:
        raise BoundsError("Chebyshev baseline requires b1 > -1")
    if bounds.b1 == bounds.bN:
        raise BoundsError("Chebyshev baseline requires b1 < bN")
    gamma = 2.0 / (2.0 - bounds.b1 - bounds.bN)
    sigma = (bounds.bN - bounds.b1) / (2.0 - bounds.b1 - bounds.bN)
    return ChebyshevParams(gamma=gamma, sigma=sigma)


def chebyshev_asymptotic_rate(bounds: SpectrumBounds, b: complex) -> float:
    """Asymptotic factor of restricted-information Chebyshev at eigenvalue b.

    With t(b) = (2b - b1 - bN)/(bN - b1) and t1 = t(1), the factor is
    max(|t+s|, |t-s|) / (t1 + sqrt(t1^2 - 1)) where s = sqrt(t^2 - 1).
    Since |t+s| |t-s| = 1, taking the max selects the exterior branch of the
    conformal map without branch bookkeeping; on the real interval itself
    both moduli equal 1.
    """
    return float(_cheb_rate_grid(bounds, np.asarray(b, dtype=np.complex128)))


def _cheb_rate_grid(bounds: SpectrumBounds, b: np.ndarray) -> np.ndarray:
    b1, bN = bounds.b1, bounds.bN
    if b1 == bN:
        raise BoundsError("Chebyshev rate requires b1 < bN")
    t = (2.0 * b - b1 - bN) / (bN - b1)
    t1 = (2.0 - b1 - bN) / (bN - b1)
    s = np.sqrt(t * t - 1.0 + 0j)
    num = np.maximum(np.abs(t + s), np.abs(t - s))
    return num / (t1 + math.sqrt(t1 * t1 - 1.0))


@dataclasses.dataclass(frozen=True)
class NesterovScheme:
    c: float


@dataclasses.dataclass(frozen=True)
class ChebyshevScheme:
    params: ChebyshevParams


def scalar_recurrence_rate_oracle(scheme: Union[NesterovScheme, ChebyshevScheme],
                                  b: complex, iters: int = 2000) -> float:
    """Empirical asymptotic factor of a scheme run on the scalar iteration e -> b e.

    Runs the actual error recurrence (momentum or Chebyshev with its true
    beta sequence) in complex arithmetic and returns the geometric mean of
    the last iters/4 successive magnitude ratios. Independent oracle for the
    analytic rates; renormalizes to dodge overflow/underflow.
    """
    if iters < 100:
        raise ValueError("iters must be >= 100")
    b = complex(b)
    e_prev = 1.0 + 0j
    if isinstance(scheme, NesterovScheme):
        c = scheme.c
        if abs(c) >= 1.0:
            raise CoefficientDomainError("|c| < 1 required")
        e_cur = b * e_prev
        def step(cur, prev, _k):
            return b * ((1.0 + c) * cur - c * prev)
    elif isinstance(scheme, ChebyshevScheme):
        p = scheme.params
        m = p.gamma * b + 1.0 - p.gamma
        e_cur = m * e_prev
        betas = p.beta_sequence()
        next(betas)  # beta_1 belongs to the first step, already taken
        def step(cur, prev, _k):
            beta = next(betas)
            return beta * m * cur + (1.0 - beta) * prev
    else:
        raise TypeError("unknown scheme %r" % (scheme,))

    # log-magnitude ledger with periodic renormalization; ratios are
    # scale-invariant because each step is linear in (e_cur, e_prev) jointly
    if e_cur == 0:
        return 0.0
    logmags = [0.0, _safe_log(abs(e_cur))]
    for k in range(1, iters):
        e_next = step(e_cur, e_prev, k)
        if not (np.isfinite(e_next.real) and np.isfinite(e_next.imag)):
            raise DivergentMapError("divergent map")
        if e_next == 0 and e_cur == 0:
            return 0.0
        # floored log difference: exact telescoping away from zeros, and a
        # transient zero-crossing cancels over the averaging window
        logmags.append(logmags[-1] + _safe_log(abs(e_next)) - _safe_log(abs(e_cur)))
        e_prev, e_cur = e_cur, e_next
        scale = abs(e_cur)
        if scale > 1e120 or (0.0 < scale < 1e-120):
            e_prev /= scale
            e_cur /= scale
    m_last = iters // 4
    # telescoped geometric mean of the last m_last ratios
    span = logmags[-1] - logmags[-1 - m_last]
    return float(math.exp(span / m_last))


def _safe_log(x: float) -> float:
    return math.log(x) if x > 0.0 else -745.0  # log of smallest subnormal


@dataclasses.dataclass(frozen=True)
class RegionGrid:
    """Rectangular complex-plane sample grid, inclusive endpoints."""

    re_min: float
    re_max: float
    im_min: float
    im_max: float
    step: float

    def __post_init__(self):
        if self.step <= 0:
            raise ValueError("grid step must be positive")
        if self.re_max < self.re_min or self.im_max < self.im_min:
            raise ValueError("grid range is empty")

    @classmethod
    def square(cls, n_points: int) -> "RegionGrid":
        """[-1, 1]^2 with n_points per axis."""
        if n_points < 3:
            raise ValueError("need at least 3 points per axis")
        return cls(-1.0, 1.0, -1.0, 1.0, 2.0 / (n_points - 1))

    def re_axis(self) -> np.ndarray:
        return self._axis(self.re_min, self.re_max)

    def im_axis(self) -> np.ndarray:
        return self._axis(self.im_min, self.im_max)

    def _axis(self, lo: float, hi: float) -> np.ndarray:
        count = int(round((hi - lo) / self.step)) + 1
        return np.linspace(lo, hi, count)


@dataclasses.dataclass
class RegionMap:
    """Per-point momentum/Chebyshev rates and validity flags on a grid.

    Records are in row-major order: re ascending outer, im ascending inner.
    ``*_valid`` means the scheme's rate at that point does not exceed the
    bounds' guaranteed factor r* (tolerance 1e-12; the rates are analytic,
    not stochastic).
    """

    bounds: SpectrumBounds
    grid: RegionGrid
    re: np.ndarray
    im: np.ndarray
    nesterov_rate: np.ndarray
    cheb_rate: np.ndarray
    nesterov_valid: np.ndarray
    cheb_valid: np.ndarray

    def write_csv(self, out: IO[str]) -> None:
        out.write("re,im,nesterov_rate,cheb_rate,nesterov_valid,cheb_valid\n")
        for i in range(len(self.re)):
            out.write("%.9g,%.9g,%.9g,%.9g,%d,%d\n" % (
                self.re[i], self.im[i], self.nesterov_rate[i], self.cheb_rate[i],
                int(self.nesterov_valid[i]), int(self.cheb_valid[i])))

    def containment_exceptions(self) -> int:
        """Grid points where Chebyshev is valid but the momentum scheme is not."""
        return int(np.sum(self.cheb_valid & ~self.nesterov_valid))


def _region_workers() -> int:
    raw = os.environ.get("NESTERSOLVE_THREADS", "1")
    try:
        return max(1, int(raw))
    except ValueError:
        return 1


def region_scan(bounds: SpectrumBounds, grid: RegionGrid) -> RegionMap:
    """Scan a complex-plane grid, rating both schemes against the bounds' r*.

    All points are independent; when NESTERSOLVE_THREADS > 1 the re-rows are
    partitioned into contiguous blocks across a thread pool (numpy releases
    the GIL), reassembled in deterministic row-major order.
    """
    acc = optimal_coefficient(bounds)
    re_ax = grid.re_axis()
    im_ax = grid.im_axis()
    n_re, n_im = len(re_ax), len(im_ax)

    def rate_rows(block: np.ndarray):
        B = block[:, None] + 1j * im_ax[None, :]
        return (_rate_complex_grid(acc.c_star, B), _cheb_rate_grid(bounds, B))

    workers = min(_region_workers(), n_re)
    if workers == 1:
        nest, cheb = rate_rows(re_ax)
    else:
        splits = np.array_split(re_ax, workers)
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(rate_rows, splits))
        nest = np.vstack([p[0] for p in parts])
        cheb = np.vstack([p[1] for p in parts])

    RE, IM = np.meshgrid(re_ax, im_ax, indexing="ij")
    tol = acc.r_star + 1e-12
    return RegionMap(
        bounds=bounds,
        grid=grid,
        re=RE.ravel(),
        im=IM.ravel(),
        nesterov_rate=nest.ravel(),
        cheb_rate=cheb.ravel(),
        nesterov_valid=(nest <= tol).ravel(),
        cheb_valid=(cheb <= tol).ravel(),
    )
