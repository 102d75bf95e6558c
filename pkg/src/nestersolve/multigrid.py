"""Geometric multigrid V-cycles for 2-D elliptic problems on the unit square.

Operators are stored as per-node 3x3 stencils over the interior of a uniform
grid with homogeneous Dirichlet boundaries (boundary neighbors are zero via
padding, boundary data is folded into the right-hand side by convention).
Levels are built either by rediscretizing the 5-point Laplacian or by the
Galerkin triple product with full-weighting restriction and bilinear
prolongation. The V-cycle implements the stationary-sweep interface
consumed by the acceleration drivers.
"""

from __future__ import annotations

import dataclasses
from typing import List, Optional, Union

import numpy as np
import scipy.sparse as sp
from numba import njit

from .linalg import CsrMatrix


class MultigridError(ValueError):
    pass


@dataclasses.dataclass(frozen=True)
class Grid2D:
    """Uniform square grid: n interior points per side, mesh width h = 1/(n+1).

    n must be 2^k - 1 so vertex coarsening (keep every second interior
    point) terminates; equivalently the cell count per side n+1 is a power
    of two, which is also what the cell-based FEM coefficient field needs.
    """

    n: int

    def __post_init__(self):
        if self.n < 1:
            raise MultigridError("need at least one interior point")

    @property
    def h(self) -> float:
        return 1.0 / (self.n + 1)

    @property
    def cells(self) -> int:
        return self.n + 1

    @property
    def unknowns(self) -> int:
        return self.n * self.n

    def coarse(self) -> "Grid2D":
        if self.n % 2 == 0 or self.n < 3:
            raise MultigridError("grid with n=%d is not coarsenable" % self.n)
        return Grid2D((self.n - 1) // 2)


@dataclasses.dataclass(frozen=True)
class CoefficientField:
    """Per-cell positive diffusion coefficients, shape (cells, cells)."""

    grid: Grid2D
    values: np.ndarray

    def __post_init__(self):
        v = np.asarray(self.values, dtype=np.float64)
        if v.shape != (self.grid.cells, self.grid.cells):
            raise MultigridError("coefficient field must be one value per cell")
        object.__setattr__(self, "values", v)


class StencilOperator:
    """9-point operator: weights S[i, j, di+1, dj+1] couple node (i,j) to (i+di, j+dj)."""

    def __init__(self, grid: Grid2D, stencils: np.ndarray):
        stencils = np.asarray(stencils, dtype=np.float64)
        if stencils.shape != (grid.n, grid.n, 3, 3):
            raise MultigridError("stencil array must be (n, n, 3, 3)")
        self.grid = grid
        self.S = stencils

    def apply(self, x: np.ndarray) -> np.ndarray:
        """y = A x with zero (Dirichlet) padding outside the interior."""
        n = self.grid.n
        Xp = np.zeros((n + 2, n + 2))
        Xp[1:-1, 1:-1] = x.reshape(n, n)
        y = np.zeros((n, n))
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                y += self.S[:, :, di + 1, dj + 1] * Xp[1 + di:1 + di + n, 1 + dj:1 + dj + n]
        return y.ravel()

    def diagonal(self) -> np.ndarray:
        return self.S[:, :, 1, 1].ravel()

    def to_scipy(self) -> sp.csr_matrix:
        n = self.grid.n
        I, J = np.meshgrid(np.arange(n), np.arange(n), indexing="ij")
        rows, cols, vals = [], [], []
        for di in (-1, 0, 1):
            for dj in (-1, 0, 1):
                w = self.S[:, :, di + 1, dj + 1]
                In, Jn = I + di, J + dj
                m = (In >= 0) & (In < n) & (Jn >= 0) & (Jn < n) & (w != 0.0)
                rows.append(I[m] * n + J[m])
                cols.append(In[m] * n + Jn[m])
                vals.append(w[m])
        A = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                          shape=(n * n, n * n))
        A.sum_duplicates()
        return A

    def as_csr(self) -> CsrMatrix:
        return CsrMatrix.from_scipy(self.to_scipy())


def build_poisson_5pt(grid: Grid2D) -> StencilOperator:
    """Standard five-point Laplacian, (1/h^2) [0,-1,0; -1,4,-1; 0,-1,0]."""
    n = grid.n
    inv_h2 = 1.0 / grid.h**2
    S = np.zeros((n, n, 3, 3))
    S[:, :, 1, 1] = 4.0 * inv_h2
    S[:, :, 0, 1] = -inv_h2
    S[:, :, 2, 1] = -inv_h2
    S[:, :, 1, 0] = -inv_h2
    S[:, :, 1, 2] = -inv_h2
    return StencilOperator(grid, S)


def sample_coefficients(grid: Grid2D, dist: str, seed: int) -> CoefficientField:
    """One positive coefficient per cell: 'lognormal' (mu=0, s=1) or 'uniform' on (0,1)."""
    rng = np.random.default_rng(seed)
    shape = (grid.cells, grid.cells)
    if dist == "lognormal":
        v = rng.lognormal(mean=0.0, sigma=1.0, size=shape)
    elif dist == "uniform":
        v = rng.uniform(0.0, 1.0, size=shape)
        while np.any(v == 0.0):  # keep the open-interval invariant
            v[v == 0.0] = rng.uniform(0.0, 1.0, size=int(np.sum(v == 0.0)))
    else:
        raise MultigridError("unknown coefficient distribution %r" % dist)
    return CoefficientField(grid, v)


# bilinear element stiffness for unit coefficient; corner order
# (0,0), (0,1), (1,1), (1,0) counterclockwise in (row, col) offsets
_ELEMENT_K = np.array([
    [4.0, -1.0, -2.0, -1.0],
    [-1.0, 4.0, -1.0, -2.0],
    [-2.0, -1.0, 4.0, -1.0],
    [-1.0, -2.0, -1.0, 4.0],
]) / 6.0
_CORNERS = ((0, 0), (0, 1), (1, 1), (1, 0))


def build_fem_diffusion(grid: Grid2D, coeff: CoefficientField) -> StencilOperator:
    """Bilinear finite-element diffusion operator with per-cell coefficients.

    Each cell contributes sigma_e times the unit bilinear stiffness matrix
    to its four corner nodes (the scaling is h-independent in 2-D). Rows for
    boundary nodes are dropped; couplings to boundary nodes vanish under the
    homogeneous Dirichlet convention.
    """
    if coeff.grid != grid:
        raise MultigridError("coefficient field lives on a different grid")
    sigma = coeff.values
    if np.any(sigma <= 0.0) or not np.all(np.isfinite(sigma)):
        raise MultigridError("coefficients must be positive and finite")
    n = grid.n
    # accumulate on all nodes including boundary, then keep interior rows
    Sfull = np.zeros((n + 2, n + 2, 3, 3))
    for a, (ai, aj) in enumerate(_CORNERS):
        for b, (bi, bj) in enumerate(_CORNERS):
            di, dj = bi - ai, bj - aj
            Sfull[ai:ai + n + 1, aj:aj + n + 1, di + 1, dj + 1] += _ELEMENT_K[a, b] * sigma
    return StencilOperator(grid, Sfull[1:n + 1, 1:n + 1])


@dataclasses.dataclass(frozen=True)
class JacobiDamped:
    omega: float = 0.8

    def __post_init__(self):
        if not (0.0 < self.omega <= 1.0):
            raise MultigridError("omega must be in (0, 1]")


@dataclasses.dataclass(frozen=True)
class RedBlackGS:
    pass


@dataclasses.dataclass(frozen=True)
class LexGS:
    pass


RelaxKind = Union[JacobiDamped, RedBlackGS, LexGS]


@njit(cache=True)
def _gs_kernel(S, X, B, color):
    """Sequential Gauss-Seidel over the interior, lexicographic within a pass.

    color = -1 sweeps every node; 0/1 sweep only nodes with (i+j) % 2 == color.
    Sequential updates matter for 9-point stencils, where diagonal neighbors
    share a color.
    """
    n = X.shape[0]
    for i in range(n):
        for j in range(n):
            if color >= 0 and (i + j) % 2 != color:
                continue
            s = B[i, j]
            for di in range(-1, 2):
                for dj in range(-1, 2):
                    if di == 0 and dj == 0:
                        continue
                    ii = i + di
                    jj = j + dj
                    if 0 <= ii < n and 0 <= jj < n:
                        s -= S[i, j, di + 1, dj + 1] * X[ii, jj]
            X[i, j] = s / S[i, j, 1, 1]


def relax_sweep(kind: RelaxKind, op: StencilOperator, x: np.ndarray,
                rhs: np.ndarray) -> np.ndarray:
    """One relaxation sweep; exact solutions are fixed points of every kind."""
    diag = op.diagonal()
    if np.any(diag == 0.0):
        raise MultigridError("zero diagonal entry")
    if isinstance(kind, JacobiDamped):
        return x + kind.omega * (rhs - op.apply(x)) / diag
    n = op.grid.n
    X = np.array(x, dtype=np.float64).reshape(n, n).copy()
    B = np.asarray(rhs, dtype=np.float64).reshape(n, n)
    if isinstance(kind, RedBlackGS):
        _gs_kernel(op.S, X, B, 0)  # red: (i + j) even
        _gs_kernel(op.S, X, B, 1)
    elif isinstance(kind, LexGS):
        _gs_kernel(op.S, X, B, -1)
    else:
        raise MultigridError("unknown relaxation %r" % (kind,))
    return X.ravel()


_FW_WEIGHTS = {(0, 0): 4.0, (0, 1): 2.0, (0, -1): 2.0, (1, 0): 2.0, (-1, 0): 2.0,
               (1, 1): 1.0, (1, -1): 1.0, (-1, 1): 1.0, (-1, -1): 1.0}


def restrict_full_weighting(fine: np.ndarray, grid: Grid2D) -> np.ndarray:
    """Full-weighting restriction, stencil (1/16)[1,2,1; 2,4,2; 1,2,1].

    Coarse node I maps to fine node 2I+1 (0-based interior indices).
    """
    n = grid.n
    nc = grid.coarse().n
    Rp = np.zeros((n + 2, n + 2))
    Rp[1:-1, 1:-1] = fine.reshape(n, n)
    out = np.zeros((nc, nc))
    for (di, dj), w in _FW_WEIGHTS.items():
        out += (w / 16.0) * Rp[2 + di:2 + di + 2 * nc:2, 2 + dj:2 + dj + 2 * nc:2]
    return out.ravel()


def prolong_bilinear(coarse: np.ndarray, coarse_grid: Grid2D) -> np.ndarray:
    """Bilinear interpolation, the transpose of full weighting scaled by 4."""
    nc = coarse_grid.n
    n = 2 * nc + 1
    C = coarse.reshape(nc, nc)
    Cp = np.zeros((nc + 2, nc + 2))
    Cp[1:-1, 1:-1] = C
    F = np.zeros((n, n))
    F[1::2, 1::2] = C
    F[0::2, 1::2] = 0.5 * (Cp[0:-1, 1:-1] + Cp[1:, 1:-1])
    F[1::2, 0::2] = 0.5 * (Cp[1:-1, 0:-1] + Cp[1:-1, 1:])
    F[0::2, 0::2] = 0.25 * (Cp[0:-1, 0:-1] + Cp[0:-1, 1:] + Cp[1:, 0:-1] + Cp[1:, 1:])
    return F.ravel()


def _transfer_matrices(grid: Grid2D):
    """Sparse (R, P) realizing the stencil transfers; P = 4 R^T."""
    n = grid.n
    nc = grid.coarse().n
    I, J = np.meshgrid(np.arange(nc), np.arange(nc), indexing="ij")
    I, J = I.ravel(), J.ravel()
    rows, cols, vals = [], [], []
    for (di, dj), w in _FW_WEIGHTS.items():
        i, j = 2 * I + 1 + di, 2 * J + 1 + dj
        m = (i >= 0) & (i < n) & (j >= 0) & (j < n)
        rows.append(I[m] * nc + J[m])
        cols.append(i[m] * n + j[m])
        vals.append(np.full(int(m.sum()), w / 16.0))
    R = sp.csr_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
                      shape=(nc * nc, n * n))
    return R, (4.0 * R).T.tocsr()


def coarsen(op: StencilOperator, kind: str) -> StencilOperator:
    """Coarse operator: 'rediscretize' (5-point Laplacian) or 'galerkin' (R A P)."""
    cg = op.grid.coarse()
    if kind == "rediscretize":
        return build_poisson_5pt(cg)
    if kind != "galerkin":
        raise MultigridError("unknown coarsening %r" % kind)
    R, P = _transfer_matrices(op.grid)
    Ac = (R @ op.to_scipy() @ P).tocoo()
    nc = cg.n
    I, J = np.divmod(Ac.row, nc)
    I2, J2 = np.divmod(Ac.col, nc)
    di, dj = I2 - I, J2 - J
    if np.any(np.abs(di) > 1) or np.any(np.abs(dj) > 1):
        raise MultigridError("Galerkin product left the 9-point pattern")
    Sc = np.zeros((nc, nc, 3, 3))
    np.add.at(Sc, (I, J, di + 1, dj + 1), Ac.data)
    return StencilOperator(cg, Sc)


@dataclasses.dataclass(frozen=True)
class CycleSpec:
    """V(nu1, nu2) cycle configuration."""

    nu1: int = 1
    nu2: int = 1
    relax: RelaxKind = dataclasses.field(default_factory=JacobiDamped)
    coarsening: str = "rediscretize"
    coarsest_max_unknowns: int = 1024

    def __post_init__(self):
        if self.nu1 < 0 or self.nu2 < 0 or self.nu1 + self.nu2 < 1:
            raise MultigridError("need nu1 + nu2 >= 1")
        if self.coarsening not in ("rediscretize", "galerkin"):
            raise MultigridError("unknown coarsening %r" % self.coarsening)


class MultigridHierarchy:
    """Immutable level stack: stencil operators down to a direct-solve level."""

    def __init__(self, fine_op: StencilOperator, spec: CycleSpec):
        self.spec = spec
        self.levels: List[StencilOperator] = [fine_op]
        while self.levels[-1].grid.unknowns > spec.coarsest_max_unknowns:
            self.levels.append(coarsen(self.levels[-1], spec.coarsening))
        coarsest = self.levels[-1]
        self._coarse_inv = np.linalg.inv(coarsest.to_scipy().toarray())

    @property
    def fine_grid(self) -> Grid2D:
        return self.levels[0].grid

    def coarse_solve(self, rhs: np.ndarray) -> np.ndarray:
        return self._coarse_inv @ rhs


def v_cycle(hier: MultigridHierarchy, spec: CycleSpec, x: np.ndarray,
            rhs: np.ndarray, level: int = 0) -> np.ndarray:
    """One V(nu1, nu2) cycle; a stationary sweep in x for fixed rhs."""
    op = hier.levels[level]
    if level == len(hier.levels) - 1:
        return hier.coarse_solve(rhs)
    for _ in range(spec.nu1):
        x = relax_sweep(spec.relax, op, x, rhs)
    resid = rhs - op.apply(x)
    coarse_rhs = restrict_full_weighting(resid, op.grid)
    coarse_x = np.zeros_like(coarse_rhs)
    coarse_x = v_cycle(hier, spec, coarse_x, coarse_rhs, level + 1)
    x = x + prolong_bilinear(coarse_x, op.grid.coarse())
    for _ in range(spec.nu2):
        x = relax_sweep(spec.relax, op, x, rhs)
    return x


class VCycleSweep:
    """StationarySweep adapter over a hierarchy and cycle spec."""

    def __init__(self, hier: MultigridHierarchy, spec: Optional[CycleSpec] = None):
        self.hier = hier
        self.spec = spec if spec is not None else hier.spec

    @property
    def dim(self) -> int:
        return self.hier.fine_grid.unknowns

    def sweep(self, x: np.ndarray, rhs: np.ndarray) -> np.ndarray:
        return v_cycle(self.hier, self.spec, np.asarray(x, dtype=np.float64), rhs)
