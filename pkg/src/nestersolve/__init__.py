"""Accelerated stationary linear iterations.

Computes the provably optimal fixed momentum coefficient for a stationary
iteration whose iteration-matrix eigenvalues lie in a known real interval,
quantifies its robustness to complex eigenvalues, and races the resulting
scheme against restricted-information Chebyshev, PCG and GMRES baselines on
a built-in geometric multigrid solver.
"""

from .spectral import (
    SpectrumBounds,
    OptimalAcceleration,
    ChebyshevParams,
    Regime,
    optimal_coefficient,
    critical_c,
    critical_b,
    rate_real,
    rate_complex,
    acceleration_ratio,
    chebyshev_parameters,
    chebyshev_asymptotic_rate,
    region_scan,
)

__all__ = [
    "SpectrumBounds",
    "OptimalAcceleration",
    "ChebyshevParams",
    "Regime",
    "optimal_coefficient",
    "critical_c",
    "critical_b",
    "rate_real",
    "rate_complex",
    "acceleration_ratio",
    "chebyshev_parameters",
    "chebyshev_asymptotic_rate",
    "region_scan",
]

__version__ = "0.1.0"
