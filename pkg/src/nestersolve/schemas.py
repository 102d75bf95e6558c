"""Request/response models for the HTTP service and CLI."""

from __future__ import annotations

from typing import List, Literal, Optional

from pydantic import BaseModel, Field, model_validator


class RelaxConfig(BaseModel):
    kind: Literal["jacobi", "rb-gs", "lex-gs"] = "jacobi"
    omega: float = Field(default=0.8, gt=0.0, le=1.0)


class ProblemConfig(BaseModel):
    """A 2-D elliptic problem plus the V-cycle that sweeps it.

    ``n`` counts grid cells per side (must be a power of two); the linear
    system lives on the n-1 interior nodes per side. ``seed`` drives the
    coefficient sampling (diffusion problems) and, offset by one, the
    right-hand side.
    """

    problem: Literal["poisson", "diffusion-lognormal", "diffusion-uniform"] = "poisson"
    n: int = Field(default=128, ge=4)
    seed: int = 0
    relax: RelaxConfig = Field(default_factory=RelaxConfig)
    nu1: int = Field(default=1, ge=0)
    nu2: int = Field(default=1, ge=0)
    coarsening: Literal["rediscretize", "galerkin"] = "rediscretize"

    @model_validator(mode="after")
    def _check(self) -> "ProblemConfig":
        if self.n & (self.n - 1):
            raise ValueError("n must be a power of two (cells per side)")
        if self.nu1 + self.nu2 < 1:
            raise ValueError("need nu1 + nu2 >= 1")
        if self.problem != "poisson" and self.coarsening == "rediscretize":
            raise ValueError("rediscretize coarsening only rebuilds the Poisson operator")
        return self


class BoundsSpec(BaseModel):
    """Where (b1, bN) come from.

    * explicit: taken from b1/bN here.
    * smoothing: single-sweep Jacobi symbol range (Jacobi relaxation only).
    * analytic: V(nu1,nu2) prediction, symbol range to the power nu1+nu2.
    * power: power method on the assembled cycle; b1 is 0 when
      assume_b1_zero else min(opposite estimate, 0).
    """

    source: Literal["explicit", "smoothing", "analytic", "power"] = "analytic"
    b1: Optional[float] = None
    bN: Optional[float] = None
    assume_b1_zero: bool = False
    power_iters: int = Field(default=100, ge=20)

    @model_validator(mode="after")
    def _check(self) -> "BoundsSpec":
        if self.source == "explicit" and (self.b1 is None or self.bN is None):
            raise ValueError("explicit bounds need b1 and bN")
        return self


class SolveRequest(BaseModel):
    config: ProblemConfig = Field(default_factory=ProblemConfig)
    accel: Literal["none", "nesterov", "chebyshev", "pcg", "gmres"] = "none"
    bounds: BoundsSpec = Field(default_factory=BoundsSpec)
    tol: float = Field(default=1e-8, gt=0.0)
    max_iter: int = Field(default=200, ge=1)


class CompareRequest(BaseModel):
    config: ProblemConfig = Field(default_factory=ProblemConfig)
    accels: List[Literal["none", "nesterov", "chebyshev", "pcg", "gmres"]] = Field(
        default_factory=lambda: ["none", "nesterov", "chebyshev", "pcg"])
    bounds: BoundsSpec = Field(default_factory=BoundsSpec)
    tol: float = Field(default=1e-8, gt=0.0)
    max_iter: int = Field(default=200, ge=1)


class CoefRequest(BaseModel):
    b1: float
    bN: float


class CoefResponse(BaseModel):
    b1: float
    bN: float
    c_star: float
    r_star: float
    regime: Literal["top", "mid", "bot"]
    robustness_radius: float
    extended: bool
    acceleration_ratio: Optional[float] = None
    acceleration_ratio_note: Optional[str] = None


class RegionRequest(BaseModel):
    b1: float
    bN: float
    grid_n: int = Field(default=401, ge=3)


class DampingSweepRequest(BaseModel):
    omega_min: float = Field(default=0.55, gt=0.0, le=1.0)
    omega_max: float = Field(default=1.0, gt=0.0, le=1.0)
    step: float = Field(default=0.05, gt=0.0)
    n: int = Field(default=256, ge=4)
    tol: float = Field(default=1e-8, gt=0.0)
    max_iter: int = Field(default=200, ge=1)
    seed: int = 0

    @model_validator(mode="after")
    def _check(self) -> "DampingSweepRequest":
        if self.omega_max < self.omega_min:
            raise ValueError("omega_max must be >= omega_min")
        if self.n & (self.n - 1):
            raise ValueError("n must be a power of two (cells per side)")
        return self


class DampingSweepRow(BaseModel):
    omega: float
    b1: float
    bN: float
    plain_pred: float
    nesterov_pred: float
    plain_meas: float
    nesterov_meas: float


class DampingSweepResponse(BaseModel):
    rows: List[DampingSweepRow]


class TraceRow(BaseModel):
    iter: int
    residual_norm: float
    cf: Optional[float] = None
    seconds: float


class BoundsUsed(BaseModel):
    source: str
    b1: float
    bN: float
    complex_dominant: bool = False


class SolveSummary(BaseModel):
    accel: str
    iterations: int
    converged: bool
    acf: Optional[float] = None
    seconds: Optional[float] = None
    bounds_used: Optional[BoundsUsed] = None
    c_star: Optional[float] = None
    r_star: Optional[float] = None
    gamma: Optional[float] = None
    sigma: Optional[float] = None


class SolveResponse(BaseModel):
    summary: SolveSummary
    trace: List[TraceRow]


class CompareResponse(BaseModel):
    results: List[SolveResponse]


class EstimateRequest(BaseModel):
    config: ProblemConfig = Field(default_factory=ProblemConfig)
    iters: int = Field(default=100, ge=20)
    shift: Optional[float] = None
    seed: int = 0


class EstimateResponse(BaseModel):
    dominant: float
    opposite: float
    complex_dominant: bool
    smoothing_b1: Optional[float] = None
    smoothing_bN: Optional[float] = None


class ErrorBody(BaseModel):
    type: str
    message: str
