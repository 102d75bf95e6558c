"""Acceleration drivers around a stationary sweep, with residual tracing.

Every driver wraps an abstract one-application sweep x -> Bx + constant(rhs)
and records the explicit residual rhs - A x each iteration (traces are
measurement artifacts; exactness beats speed here). Drivers: plain
iteration, fixed-coefficient momentum, restricted-information Chebyshev,
PCG with the sweep as preconditioner, and no-restart GMRES.
"""

from __future__ import annotations

import dataclasses
import math
import time
from typing import IO, List, Optional, Protocol, Tuple, runtime_checkable

import numpy as np

from .linalg import CsrMatrix, spmv
from .spectral import ChebyshevParams


class SolverDivergedError(RuntimeError):
    """Residual became non-finite; carries the partial trace as .trace."""

    def __init__(self, message: str, trace: "IterationTrace"):
        super().__init__(message)
        self.trace = trace


class IndefiniteOperatorError(RuntimeError):
    """PCG met non-positive curvature."""


@runtime_checkable
class StationarySweep(Protocol):
    """One application of x -> Bx + constant(rhs); affine in (x, rhs)."""

    @property
    def dim(self) -> int: ...

    def sweep(self, x: np.ndarray, rhs: np.ndarray) -> np.ndarray: ...


class DiagonalSweep:
    """Synthetic sweep with an explicit spectrum: sweep(x, rhs) = d*x + rhs.

    Realizes B = diag(d); the matching system operator is A = I - diag(d),
    so the sweep is the standard splitting iteration for A x = rhs with
    M = I.
    """

    def __init__(self, eigenvalues):
        self.d = np.asarray(eigenvalues, dtype=np.float64)

    @property
    def dim(self) -> int:
        return self.d.shape[0]

    def sweep(self, x: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        return self.d * x + rhs

    def operator(self) -> CsrMatrix:
        return CsrMatrix.diagonal(1.0 - self.d)


class IdentitySweep:
    """sweep(x, rhs) = x + (rhs - A x) for A = I: exact solver in one step."""

    def __init__(self, n: int):
        self.n = n

    @property
    def dim(self) -> int:
        return self.n

    def sweep(self, x: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        return np.array(rhs, dtype=np.float64, copy=True)


@dataclasses.dataclass(frozen=True)
class StopRule:
    """Relative residual stopping: ||r_k|| / ||r_0|| <= tol, capped at max_iter."""

    tol: float = 1e-8
    max_iter: int = 200

    def __post_init__(self):
        if not (self.tol > 0.0):
            raise ValueError("tol must be positive")
        if self.max_iter < 1:
            raise ValueError("max_iter must be >= 1")


@dataclasses.dataclass
class IterationTrace:
    """Residual norms, convergence factors and cumulative wall time per iteration."""

    residuals: List[float]
    seconds: List[float]
    converged: bool

    @property
    def iterations(self) -> int:
        return len(self.residuals) - 1

    def cf(self, k: int) -> float:
        """||r_k|| / ||r_{k-1}||, defined for k >= 1."""
        if k < 1 or k > self.iterations:
            raise IndexError("cf defined for 1 <= k <= iterations")
        return self.residuals[k] / self.residuals[k - 1]

    @property
    def status(self) -> str:
        return "converged" if self.converged else "max_iter"

    def write_csv(self, out: IO[str], include_timing: bool = True) -> None:
        out.write("iter,residual_norm,cf,seconds\n")
        for k, r in enumerate(self.residuals):
            cf = "" if k == 0 else "%.9g" % self.cf(k)
            sec = "%.6f" % self.seconds[k] if include_timing else ""
            out.write("%d,%.9g,%s,%s\n" % (k, r, cf, sec))


def acf_estimate(trace: IterationTrace, m: int = 5) -> float:
    """Geometric mean of the last m convergence factors."""
    if trace.iterations < m:
        raise ValueError("insufficient records: need at least %d residuals" % (m + 1))
    ks = range(trace.iterations - m + 1, trace.iterations + 1)
    return float(math.exp(sum(math.log(trace.cf(k)) for k in ks) / m))


class _Tracer:
    """Shared residual bookkeeping for all drivers."""

    def __init__(self, A: CsrMatrix, rhs: np.ndarray, stop: StopRule):
        self.A = A
        self.rhs = rhs
        self.stop = stop
        self.residuals: List[float] = []
        self.seconds: List[float] = []
        self.t0 = time.perf_counter()
        self.r0: Optional[float] = None

    def record(self, x: np.ndarray) -> Tuple[bool, np.ndarray]:
        """Record the explicit residual of x; returns (done, residual_vector)."""
        r = self.rhs - spmv(self.A, x)
        rn = float(np.linalg.norm(r))
        self.residuals.append(rn)
        self.seconds.append(time.perf_counter() - self.t0)
        if not np.isfinite(rn):
            raise SolverDivergedError("diverged", self.finish(False))
        if self.r0 is None:
            self.r0 = rn
        done = rn <= self.stop.tol * self.r0
        return done, r

    def finish(self, converged: bool) -> IterationTrace:
        return IterationTrace(residuals=self.residuals, seconds=self.seconds,
                              converged=converged)


def plain_solve(op: StationarySweep, A: CsrMatrix, rhs: np.ndarray, x0: np.ndarray,
                stop: StopRule) -> Tuple[np.ndarray, IterationTrace]:
    """Unaccelerated stationary iteration x_{k+1} = sweep(x_k, rhs)."""
    tr = _Tracer(A, rhs, stop)
    x = np.array(x0, dtype=np.float64, copy=True)
    done, _ = tr.record(x)
    for _ in range(stop.max_iter):
        if done:
            break
        x = op.sweep(x, rhs)
        done, _ = tr.record(x)
    return x, tr.finish(done)


def nesterov_solve(op: StationarySweep, A: CsrMatrix, rhs: np.ndarray, x0: np.ndarray,
                   c: float, stop: StopRule) -> Tuple[np.ndarray, IterationTrace]:
    """Fixed-momentum iteration x_{k+1} = sweep((1+c) x_k - c x_{k-1}, rhs).

    Startup is one plain sweep (equivalently x_{-1} = x_0), so momentum has
    two iterates to work with from step two onward. c = 0 reproduces
    plain_solve exactly.
    """
    if abs(c) >= 1.0:
        raise ValueError("momentum requires |c| < 1")
    tr = _Tracer(A, rhs, stop)
    x_prev = np.array(x0, dtype=np.float64, copy=True)
    done, _ = tr.record(x_prev)
    x = x_prev
    first = True
    for _ in range(stop.max_iter):
        if done:
            break
        if first:
            x = op.sweep(x_prev, rhs)
            first = False
        else:
            y = (1.0 + c) * x - c * x_prev
            x_prev, x = x, op.sweep(y, rhs)
        done, _ = tr.record(x)
    return x, tr.finish(done)


def chebyshev_solve(op: StationarySweep, A: CsrMatrix, rhs: np.ndarray, x0: np.ndarray,
                    params: ChebyshevParams, stop: StopRule) -> Tuple[np.ndarray, IterationTrace]:
    """Restricted-information Chebyshev acceleration of the sweep.

    x_1 = gamma*sweep(x_0) + (1-gamma)*x_0, then
    x_{k+1} = beta_{k+1} (gamma*sweep(x_k) + (1-gamma)*x_k) + (1-beta_{k+1}) x_{k-1}.
    """
    tr = _Tracer(A, rhs, stop)
    x_prev = np.array(x0, dtype=np.float64, copy=True)
    done, _ = tr.record(x_prev)
    x = x_prev
    betas = params.beta_sequence()
    first = True
    for _ in range(stop.max_iter):
        if done:
            break
        if first:
            next(betas)  # beta_1 = 1 on the unaugmented first step
            x = params.gamma * op.sweep(x_prev, rhs) + (1.0 - params.gamma) * x_prev
            first = False
        else:
            beta = next(betas)
            inner = params.gamma * op.sweep(x, rhs) + (1.0 - params.gamma) * x
            x_prev, x = x, beta * inner + (1.0 - beta) * x_prev
        done, _ = tr.record(x)
    return x, tr.finish(done)


def _precond_apply(precond: StationarySweep, r: np.ndarray) -> np.ndarray:
    """M^{-1} r := one sweep from the zero vector with rhs = r (linear in r)."""
    return precond.sweep(np.zeros_like(r), r)


def pcg_solve(A: CsrMatrix, precond: StationarySweep, rhs: np.ndarray, x0: np.ndarray,
              stop: StopRule) -> Tuple[np.ndarray, IterationTrace]:
    """Preconditioned conjugate gradients; requires A and M^{-1} SPD.

    The trace and stopping use the explicit residual rhs - A x; the
    recursive residual drives the usual alpha/beta updates.
    """
    tr = _Tracer(A, rhs, stop)
    x = np.array(x0, dtype=np.float64, copy=True)
    done, _ = tr.record(x)
    r = rhs - spmv(A, x)
    z = _precond_apply(precond, r)
    p = z.copy()
    rz = float(np.dot(r, z))
    for _ in range(stop.max_iter):
        if done:
            break
        Ap = spmv(A, p)
        pAp = float(np.dot(p, Ap))
        if pAp <= 0.0:
            raise IndefiniteOperatorError("indefinite")
        alpha = rz / pAp
        x = x + alpha * p
        r = r - alpha * Ap
        z = _precond_apply(precond, r)
        rz_new = float(np.dot(r, z))
        p = z + (rz_new / rz) * p
        rz = rz_new
        done, _ = tr.record(x)
    return x, tr.finish(done)


def gmres_solve(A: CsrMatrix, precond: Optional[StationarySweep], rhs: np.ndarray,
                x0: np.ndarray, stop: StopRule) -> Tuple[np.ndarray, IterationTrace]:
    """Right-preconditioned GMRES, full orthogonalization, no restart.

    Modified Gram-Schmidt Arnoldi with Givens-rotation least squares. A
    vanishing new basis norm (happy breakdown) means the Krylov space
    contains the solution: the iterate is assembled and reported converged.
    The traced residuals are explicit; they are non-increasing because the
    Krylov spaces are nested.
    """
    tr = _Tracer(A, rhs, stop)
    x0 = np.array(x0, dtype=np.float64, copy=True)
    done, r0 = tr.record(x0)
    if done:
        return x0, tr.finish(True)

    def opM(v: np.ndarray) -> np.ndarray:
        return v if precond is None else _precond_apply(precond, v)

    n = rhs.shape[0]
    m = stop.max_iter
    V = np.zeros((m + 1, n))
    H = np.zeros((m + 1, m))
    cs = np.zeros(m)
    sn = np.zeros(m)
    beta0 = float(np.linalg.norm(r0))
    V[0] = r0 / beta0
    g = np.zeros(m + 1)
    g[0] = beta0

    def assemble(k: int) -> np.ndarray:
        # solve the k x k upper-triangular system and map back through M^{-1}
        y = np.linalg.solve(np.triu(H[:k, :k]), g[:k])
        return x0 + opM(V[:k].T @ y)

    x = x0
    for k in range(m):
        w = spmv(A, opM(V[k]))
        for i in range(k + 1):
            H[i, k] = float(np.dot(w, V[i]))
            w = w - H[i, k] * V[i]
        hnext = float(np.linalg.norm(w))
        H[k + 1, k] = hnext
        happy = hnext <= 1e-14 * beta0
        if not happy:
            V[k + 1] = w / hnext
        # apply accumulated rotations to the new column, then a fresh one
        for i in range(k):
            t = cs[i] * H[i, k] + sn[i] * H[i + 1, k]
            H[i + 1, k] = -sn[i] * H[i, k] + cs[i] * H[i + 1, k]
            H[i, k] = t
        denom = math.hypot(H[k, k], H[k + 1, k])
        cs[k] = H[k, k] / denom if denom else 1.0
        sn[k] = H[k + 1, k] / denom if denom else 0.0
        H[k, k] = denom
        H[k + 1, k] = 0.0
        g[k + 1] = -sn[k] * g[k]
        g[k] = cs[k] * g[k]
        x = assemble(k + 1)
        done, _ = tr.record(x)
        if done or happy:
            return x, tr.finish(True)
    return x, tr.finish(done)
