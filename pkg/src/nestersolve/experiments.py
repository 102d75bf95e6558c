"""Experiment runners: build problems, pick bounds, race accelerators.

This is the layer the HTTP endpoints call into; everything below it is the
library proper. Right-hand sides are standard normal with seed config.seed+1
(coefficient fields use config.seed), initial guesses are zero.
"""

from __future__ import annotations

import dataclasses
import math
from typing import Dict, List, Optional, Tuple

import numpy as np

from . import analysis, multigrid, solvers, spectral
from .linalg import CsrMatrix
from .schemas import (
    BoundsSpec, BoundsUsed, CompareRequest, DampingSweepRequest, DampingSweepRow,
    EstimateRequest, EstimateResponse, ProblemConfig, SolveRequest, SolveResponse,
    SolveSummary, TraceRow,
)


class ExperimentError(ValueError):
    pass


_RELAX_KINDS = {
    "jacobi": lambda omega: multigrid.JacobiDamped(omega),
    "rb-gs": lambda omega: multigrid.RedBlackGS(),
    "lex-gs": lambda omega: multigrid.LexGS(),
}


@dataclasses.dataclass
class Problem:
    config: ProblemConfig
    grid: multigrid.Grid2D
    op: multigrid.StencilOperator
    A: CsrMatrix
    sweep: multigrid.VCycleSweep
    rhs: np.ndarray


def build_problem(config: ProblemConfig) -> Problem:
    """Assemble operator, hierarchy, V-cycle sweep and right-hand side."""
    grid = multigrid.Grid2D(config.n - 1)
    if config.problem == "poisson":
        op = multigrid.build_poisson_5pt(grid)
    else:
        dist = "lognormal" if config.problem == "diffusion-lognormal" else "uniform"
        coeff = multigrid.sample_coefficients(grid, dist, config.seed)
        op = multigrid.build_fem_diffusion(grid, coeff)
    relax = _RELAX_KINDS[config.relax.kind](config.relax.omega)
    spec = multigrid.CycleSpec(nu1=config.nu1, nu2=config.nu2, relax=relax,
                               coarsening=config.coarsening)
    hier = multigrid.MultigridHierarchy(op, spec)
    sweep = multigrid.VCycleSweep(hier)
    rhs = np.random.default_rng(config.seed + 1).standard_normal(grid.unknowns)
    return Problem(config=config, grid=grid, op=op, A=op.as_csr(), sweep=sweep, rhs=rhs)


def estimate_bounds(problem: Problem, spec: BoundsSpec) -> BoundsUsed:
    """Resolve a bounds configuration against a built problem."""
    cfg = problem.config
    if spec.source == "explicit":
        return BoundsUsed(source="explicit", b1=spec.b1, bN=spec.bN)
    if spec.source in ("smoothing", "analytic"):
        if cfg.relax.kind != "jacobi" or cfg.problem != "poisson":
            raise ExperimentError(
                "%s bounds require Jacobi relaxation on the Poisson problem" % spec.source)
        power = 1 if spec.source == "smoothing" else cfg.nu1 + cfg.nu2
        rng = analysis.smoothing_range(cfg.relax.omega, power=power)
        return BoundsUsed(source=spec.source, b1=rng.b1_hat, bN=rng.bN_hat)
    est = analysis.power_extreme_eigs(problem.sweep, problem.grid.unknowns,
                                      iters=spec.power_iters, seed=cfg.seed)
    b1 = 0.0 if spec.assume_b1_zero else min(est.opposite, 0.0)
    return BoundsUsed(source="power", b1=b1, bN=est.dominant,
                      complex_dominant=est.complex_dominant)


def _trace_rows(trace: solvers.IterationTrace) -> List[TraceRow]:
    rows = []
    for k, r in enumerate(trace.residuals):
        rows.append(TraceRow(iter=k, residual_norm=r,
                             cf=None if k == 0 else trace.cf(k),
                             seconds=trace.seconds[k]))
    return rows


def _summarize(accel: str, trace: solvers.IterationTrace,
               bounds_used: Optional[BoundsUsed], extras: Dict) -> SolveSummary:
    acf = None
    if trace.iterations >= 5:
        acf = solvers.acf_estimate(trace, m=5)
    return SolveSummary(accel=accel, iterations=trace.iterations,
                        converged=trace.converged, acf=acf,
                        seconds=trace.seconds[-1] if trace.seconds else None,
                        bounds_used=bounds_used, **extras)


def run_solve(request: SolveRequest, problem: Optional[Problem] = None) -> SolveResponse:
    problem = problem if problem is not None else build_problem(request.config)
    stop = solvers.StopRule(tol=request.tol, max_iter=request.max_iter)
    x0 = np.zeros(problem.grid.unknowns)
    accel = request.accel
    bounds_used: Optional[BoundsUsed] = None
    extras: Dict = {}

    if accel in ("nesterov", "chebyshev"):
        bounds_used = estimate_bounds(problem, request.bounds)
        bounds = spectral.SpectrumBounds(bounds_used.b1, bounds_used.bN)

    try:
        if accel == "none":
            _, trace = solvers.plain_solve(problem.sweep, problem.A, problem.rhs, x0, stop)
        elif accel == "nesterov":
            acc = spectral.optimal_coefficient(bounds)
            extras = {"c_star": acc.c_star, "r_star": acc.r_star}
            _, trace = solvers.nesterov_solve(problem.sweep, problem.A, problem.rhs, x0,
                                              acc.c_star, stop)
        elif accel == "chebyshev":
            params = spectral.chebyshev_parameters(bounds)
            extras = {"gamma": params.gamma, "sigma": params.sigma}
            _, trace = solvers.chebyshev_solve(problem.sweep, problem.A, problem.rhs, x0,
                                               params, stop)
        elif accel == "pcg":
            _, trace = solvers.pcg_solve(problem.A, problem.sweep, problem.rhs, x0, stop)
        elif accel == "gmres":
            _, trace = solvers.gmres_solve(problem.A, problem.sweep, problem.rhs, x0, stop)
        else:
            raise ExperimentError("unknown accelerator %r" % accel)
    except solvers.SolverDivergedError as err:
        # divergence is a reportable outcome, not an internal failure
        return SolveResponse(summary=_summarize(accel, err.trace, bounds_used, extras),
                             trace=_trace_rows(err.trace))

    return SolveResponse(summary=_summarize(accel, trace, bounds_used, extras),
                         trace=_trace_rows(trace))


def run_compare(request: CompareRequest) -> List[SolveResponse]:
    problem = build_problem(request.config)
    out = []
    for accel in request.accels:
        sub = SolveRequest(config=request.config, accel=accel, bounds=request.bounds,
                           tol=request.tol, max_iter=request.max_iter)
        out.append(run_solve(sub, problem=problem))
    return out


def run_damping_sweep(request: DampingSweepRequest) -> List[DampingSweepRow]:
    """Predicted vs measured factors of plain and momentum V(1,0)-Jacobi cycles.

    Per damping factor omega: the smoothing-analysis bounds (b1, bN), the
    predicted plain factor max(|b1|, bN), the predicted momentum factor r*,
    and the measured factors of actual cycles on the Poisson problem.
    """
    rows: List[DampingSweepRow] = []
    count = int(round((request.omega_max - request.omega_min) / request.step)) + 1
    omegas = [request.omega_min + k * request.step for k in range(count)
              if request.omega_min + k * request.step <= request.omega_max + 1e-12]
    stop = solvers.StopRule(tol=request.tol, max_iter=request.max_iter)
    for omega in omegas:
        omega = min(omega, 1.0)
        rng = analysis.smoothing_range(omega)
        bounds = spectral.SpectrumBounds(rng.b1_hat, rng.bN_hat)
        acc = spectral.optimal_coefficient(bounds)
        config = ProblemConfig(problem="poisson", n=request.n, seed=request.seed,
                               relax={"kind": "jacobi", "omega": omega},
                               nu1=1, nu2=0, coarsening="rediscretize")
        problem = build_problem(config)
        x0 = np.zeros(problem.grid.unknowns)
        _, tr_plain = solvers.plain_solve(problem.sweep, problem.A, problem.rhs, x0, stop)
        _, tr_nest = solvers.nesterov_solve(problem.sweep, problem.A, problem.rhs, x0,
                                            acc.c_star, stop)
        rows.append(DampingSweepRow(
            omega=omega, b1=rng.b1_hat, bN=rng.bN_hat,
            plain_pred=rng.smoothing_factor, nesterov_pred=acc.r_star,
            plain_meas=solvers.acf_estimate(tr_plain),
            nesterov_meas=solvers.acf_estimate(tr_nest)))
    return rows


def run_estimate(request: EstimateRequest) -> EstimateResponse:
    problem = build_problem(request.config)
    est = analysis.power_extreme_eigs(problem.sweep, problem.grid.unknowns,
                                      iters=request.iters, shift=request.shift,
                                      seed=request.seed)
    smoothing_b1 = smoothing_bN = None
    cfg = request.config
    if cfg.relax.kind == "jacobi" and cfg.problem == "poisson":
        rng = analysis.smoothing_range(cfg.relax.omega, power=cfg.nu1 + cfg.nu2)
        smoothing_b1, smoothing_bN = rng.b1_hat, rng.bN_hat
    return EstimateResponse(dominant=est.dominant, opposite=est.opposite,
                            complex_dominant=est.complex_dominant,
                            smoothing_b1=smoothing_b1, smoothing_bN=smoothing_bN)


def render_damping_csv(rows: List[DampingSweepRow]) -> str:
    out = ["omega,b1,bN,plain_pred,nesterov_pred,plain_meas,nesterov_meas"]
    for r in rows:
        out.append("%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g" % (
            r.omega, r.b1, r.bN, r.plain_pred, r.nesterov_pred,
            r.plain_meas, r.nesterov_meas))
    return "\n".join(out) + "\n"


def render_trace_csv(trace: List[TraceRow], include_timing: bool = True) -> str:
    out = ["iter,residual_norm,cf,seconds"]
    for row in trace:
        cf = "" if row.cf is None else "%.9g" % row.cf
        sec = "%.6f" % row.seconds if include_timing else ""
        out.append("%d,%.9g,%s,%s" % (row.iter, row.residual_norm, cf, sec))
    return "\n".join(out) + "\n"
