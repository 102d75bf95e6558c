"""HTTP service exposing the coefficient formulas and experiment runners."""

from __future__ import annotations

import io

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response

from . import experiments, spectral
from .linalg import DivergentMapError, LinalgError
from .multigrid import MultigridError
from .schemas import (
    CoefRequest, CoefResponse, CompareRequest, CompareResponse, DampingSweepRequest,
    DampingSweepResponse, EstimateRequest, EstimateResponse, RegionRequest,
    SolveRequest, SolveResponse,
)
from .solvers import IndefiniteOperatorError

app = FastAPI(title="nestersolve", version="0.1.0")

_DOMAIN_ERRORS = (
    spectral.BoundsError,
    spectral.CoefficientDomainError,
    MultigridError,
    experiments.ExperimentError,
    LinalgError,
    DivergentMapError,
    IndefiniteOperatorError,
    ValueError,
)


@app.exception_handler(Exception)
async def _unhandled(request: Request, exc: Exception) -> JSONResponse:
    status = 400 if isinstance(exc, _DOMAIN_ERRORS) else 500
    return JSONResponse(status_code=status,
                        content={"error": {"type": type(exc).__name__,
                                           "message": str(exc)}})


for _etype in _DOMAIN_ERRORS:
    app.add_exception_handler(_etype, _unhandled)


@app.get("/healthz")
def healthz() -> dict:
    return {"status": "ok"}


@app.post("/coef", response_model=CoefResponse)
def coef(req: CoefRequest) -> CoefResponse:
    bounds = spectral.SpectrumBounds(req.b1, req.bN)
    acc = spectral.optimal_coefficient(bounds)
    ar = None
    note = None
    try:
        ar = spectral.acceleration_ratio(bounds)
    except spectral.BoundsError as err:
        note = str(err)
    return CoefResponse(b1=req.b1, bN=req.bN, c_star=acc.c_star, r_star=acc.r_star,
                        regime=acc.regime.value, robustness_radius=acc.robustness_radius,
                        extended=acc.extended, acceleration_ratio=ar,
                        acceleration_ratio_note=note)


@app.post("/region.csv")
def region(req: RegionRequest) -> Response:
    bounds = spectral.SpectrumBounds(req.b1, req.bN)
    rmap = spectral.region_scan(bounds, spectral.RegionGrid.square(req.grid_n))
    buf = io.StringIO()
    rmap.write_csv(buf)
    return Response(content=buf.getvalue(), media_type="text/csv")


@app.post("/damping-sweep", response_model=DampingSweepResponse)
def damping_sweep(req: DampingSweepRequest) -> DampingSweepResponse:
    return DampingSweepResponse(rows=experiments.run_damping_sweep(req))


@app.post("/solve", response_model=SolveResponse)
def solve(req: SolveRequest) -> SolveResponse:
    return experiments.run_solve(req)


@app.post("/compare", response_model=CompareResponse)
def compare(req: CompareRequest) -> CompareResponse:
    return CompareResponse(results=experiments.run_compare(req))


@app.post("/estimate", response_model=EstimateResponse)
def estimate(req: EstimateRequest) -> EstimateResponse:
    return experiments.run_estimate(req)
