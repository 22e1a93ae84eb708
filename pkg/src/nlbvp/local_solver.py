"""Finite-difference solver for the auxiliary Dirichlet problem

    -div(D grad v) + lam f(x, v) = 0 in the box,   v = g + sigma * mu on the boundary,

by damped Newton iteration. The Jacobian is SPD on interior nodes, so 1D steps use
the Thomas algorithm and 2D steps use Jacobi-preconditioned conjugate gradients.
"""

from __future__ import annotations

import math
from collections import OrderedDict
from dataclasses import dataclass
from threading import Lock

import numpy as np
import scipy.sparse as sp

from .geometry import Domain, Grid
from .problem import ProblemSpec

__all__ = [
    "SolverError",
    "NonConvergence",
    "LinearSolveFailure",
    "GridTooLarge",
    "GridFunction",
    "NewtonConfig",
    "LocalProblem",
    "DiscreteSystem",
    "local_problem",
    "discretize",
    "solve_local_dirichlet",
    "solve_dense_oracle",
    "recommended_resolution",
    "thomas",
    "pcg",
]

EPS = np.finfo(float).eps


class SolverError(RuntimeError):
    pass


class NonConvergence(SolverError):
    def __init__(self, message, iterate=None, residual=float("nan")):
        super().__init__(message)
        self.iterate = iterate
        self.residual = residual


class LinearSolveFailure(SolverError):
    pass


class GridTooLarge(ValueError):
    pass


@dataclass
class GridFunction:
    grid: Grid
    values: np.ndarray
    residual: float = float("nan")
    iterations: int = 0

    def __post_init__(self):
        self.values = np.asarray(self.values, dtype=float).reshape(self.grid.size)

    @property
    def array(self) -> np.ndarray:
        return self.values.reshape(self.grid.shape)

    @property
    def finite(self) -> bool:
        return bool(np.all(np.isfinite(self.values)))


@dataclass(frozen=True)
class NewtonConfig:
    residual_tol: float | None = None  # None: 1e-10 * lam * theta0
    max_iters: int = 50
    backtrack: float = 0.5
    min_step: float = 2.0**-20
    cg_rtol: float = 1e-12
    cg_maxiter: int | None = None

    def __post_init__(self):
        if self.residual_tol is not None and not self.residual_tol > 0:
            raise ValueError("residual_tol must be positive")
        if self.max_iters < 1:
            raise ValueError("max_iters must be at least 1")
        if not 0 < self.backtrack < 1 or not 0 < self.min_step < 1:
            raise ValueError("damping parameters must lie in (0, 1)")


# ---------------------------------------------------------------- linear algebra


def thomas(sub, diag, sup, rhs):
    """Solve a tridiagonal system; ``sub``/``sup`` have length n-1."""
    n = len(diag)
    c = np.empty(n)
    d = np.empty(n)
    b0 = diag[0]
    if b0 == 0:
        raise LinearSolveFailure("zero pivot in tridiagonal solve")
    c[0] = sup[0] / b0 if n > 1 else 0.0
    d[0] = rhs[0] / b0
    sub = sub.tolist()
    sup = sup.tolist()
    diag = diag.tolist()
    rhs = rhs.tolist()
    cl = c.tolist()
    dl = d.tolist()
    for i in range(1, n):
        denom = diag[i] - sub[i - 1] * cl[i - 1]
        if denom == 0:
            raise LinearSolveFailure("zero pivot in tridiagonal solve")
        cl[i] = sup[i] / denom if i < n - 1 else 0.0
        dl[i] = (rhs[i] - sub[i - 1] * dl[i - 1]) / denom
    x = dl
    for i in range(n - 2, -1, -1):
        x[i] -= cl[i] * x[i + 1]
    return np.array(x)


def pcg(A, b, rtol=1e-12, maxiter=None):
    """Jacobi-preconditioned conjugate gradients for SPD ``A`` (sparse matrix)."""
    n = len(b)
    if maxiter is None:
        maxiter = max(1000, 200 * int(math.sqrt(n)))
    inv_diag = 1.0 / A.diagonal()
    x = np.zeros(n)
    r = b.copy()
    bnorm = np.linalg.norm(b)
    if bnorm == 0:
        return x
    z = inv_diag * r
    p = z.copy()
    rz = r @ z
    for _ in range(maxiter):
        Ap = A @ p
        pAp = p @ Ap
        if not pAp > 0:
            raise LinearSolveFailure("conjugate gradients broke down (matrix not SPD?)")
        alpha = rz / pAp
        x += alpha * p
        r -= alpha * Ap
        if np.linalg.norm(r) <= rtol * bnorm:
            return x
        z = inv_diag * r
        rz_new = r @ z
        p *= rz_new / rz
        p += z
        rz = rz_new
    raise LinearSolveFailure(
        f"conjugate gradients stagnated: relative residual {np.linalg.norm(r) / bnorm:.2e} "
        f"after {maxiter} iterations"
    )


# ---------------------------------------------------------------- discretisation


class LocalProblem:
    """Everything about the discrete Dirichlet problem that does not depend on mu."""

    def __init__(self, spec: ProblemSpec, grid: Grid):
        if grid.domain != spec.domain:
            raise ValueError("grid and problem live on different domains")
        self.spec = spec
        self.grid = grid
        self.lam = spec.lam
        self.points = grid.points
        self.boundary = grid.boundary_mask
        self.interior = np.flatnonzero(~self.boundary)
        self.g = spec.boundary_data.on(grid)
        self.sigma = spec.nonlocal_bc.sigma(grid)
        self.h = spec.nonlinearity.root.on(grid)
        self.A = self._assemble(spec, grid)
        self.A_II = self.A[self.interior][:, self.interior].tocsr()
        self.norm_A = float(abs(self.A).sum(axis=1).max())

    @staticmethod
    def _assemble(spec, grid):
        """Diffusion operator with D sampled at face midpoints; boundary rows are empty."""
        n = grid.size
        shape = grid.shape
        strides = [int(np.prod(shape[k + 1:])) for k in range(grid.dim)]
        interior = np.flatnonzero(~grid.boundary_mask)
        x = grid.points[interior]
        rows, cols, vals = [], [], []
        diag = np.zeros(len(interior))
        for k in range(grid.dim):
            hk = grid.spacing[k]
            shift = np.zeros(grid.dim)
            shift[k] = hk / 2
            c_plus = spec.diffusion.at(x + shift) / hk**2
            c_minus = spec.diffusion.at(x - shift) / hk**2
            if np.any(c_plus <= 0) or np.any(c_minus <= 0):
                raise ValueError("diffusion must be positive at every face midpoint")
            diag += c_plus + c_minus
            rows += [interior, interior]
            cols += [interior + strides[k], interior - strides[k]]
            vals += [-c_plus, -c_minus]
        rows.append(interior)
        cols.append(interior)
        vals.append(diag)
        return sp.csr_matrix(
            (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(n, n)
        )

    def dirichlet(self, mu: float) -> np.ndarray:
        return self.g[self.boundary] + self.sigma[self.boundary] * mu

    def residual(self, v: np.ndarray, mu: float) -> np.ndarray:
        R = self.A @ v
        I = self.interior
        R[I] += self.lam * self.spec.nonlinearity.value(self.points[I], v[I])
        R[self.boundary] = v[self.boundary] - self.dirichlet(mu)
        return R

    def jacobian(self, v: np.ndarray) -> sp.csr_matrix:
        """Full Jacobian with identity rows on boundary nodes."""
        I = self.interior
        d = np.zeros(self.grid.size)
        d[I] = self.lam * self.spec.nonlinearity.ds(self.points[I], v[I])
        d[self.boundary] = 1.0
        return (self.A + sp.diags(d)).tocsr()

    def initial_guess(self, mu: float, warm_start: GridFunction | None = None) -> np.ndarray:
        if warm_start is not None:
            if warm_start.grid != self.grid:
                raise ValueError("warm start lives on a different grid")
            v = warm_start.values.copy()
        else:
            v = self.h.copy()
        v[self.boundary] = self.dirichlet(mu)
        return v

    def tolerance(self, cfg: NewtonConfig, v: np.ndarray) -> float:
        tol = cfg.residual_tol
        if tol is None:
            tol = 1e-10 * self.lam * self.spec.nonlinearity.theta0
        # rounding floor of the stencil application
        floor = 16 * EPS * self.norm_A * max(1.0, float(np.abs(v).max()))
        return max(tol, floor)

    def newton_step(self, v: np.ndarray, R: np.ndarray, cfg: NewtonConfig) -> np.ndarray:
        """Solve J dv = -R. Boundary values are already exact so dv vanishes there."""
        I = self.interior
        fs = self.spec.nonlinearity.ds(self.points[I], v[I])
        J = (self.A_II + sp.diags(self.lam * fs)).tocsr()
        rhs = -R[I]
        if self.grid.dim == 1:
            dI = thomas(J.diagonal(-1), J.diagonal(), J.diagonal(1), rhs)
        else:
            dI = pcg(J, rhs, rtol=cfg.cg_rtol, maxiter=cfg.cg_maxiter)
        dv = np.zeros_like(v)
        dv[I] = dI
        return dv

    def solve(self, mu: float, cfg: NewtonConfig | None = None, warm_start=None) -> GridFunction:
        cfg = cfg or NewtonConfig()
        v = self.initial_guess(mu, warm_start)
        R = self.residual(v, mu)
        rnorm = float(np.abs(R).max())
        for it in range(cfg.max_iters + 1):
            if not math.isfinite(rnorm):
                raise NonConvergence("residual became non-finite", GridFunction(self.grid, v), rnorm)
            if rnorm <= self.tolerance(cfg, v):
                return GridFunction(self.grid, v, residual=rnorm, iterations=it)
            if it == cfg.max_iters:
                break
            dv = self.newton_step(v, R, cfg)
            r2 = np.linalg.norm(R)
            t = 1.0
            while True:
                trial = v + t * dv
                try:
                    R_t = self.residual(trial, mu)
                except ArithmeticError:
                    R_t = np.full_like(R, np.inf)
                r2_t = np.linalg.norm(R_t)
                if r2_t <= (1 - 1e-4 * t) * r2 or np.abs(R_t).max() <= self.tolerance(cfg, trial):
                    break
                t *= cfg.backtrack
                if t < cfg.min_step:
                    raise NonConvergence(
                        f"line search failed at Newton iteration {it} (residual {rnorm:.3e})",
                        GridFunction(self.grid, v),
                        rnorm,
                    )
            v, R = trial, R_t
            rnorm = float(np.abs(R).max())
        raise NonConvergence(
            f"Newton did not converge in {cfg.max_iters} iterations (residual {rnorm:.3e})",
            GridFunction(self.grid, v),
            rnorm,
        )


_CACHE: OrderedDict = OrderedDict()
_CACHE_LOCK = Lock()
_CACHE_SIZE = 8


def local_problem(spec: ProblemSpec, grid: Grid) -> LocalProblem:
    """Memoised :class:`LocalProblem` (operator assembly is the expensive part)."""
    key = (spec, grid)
    with _CACHE_LOCK:
        if key in _CACHE:
            _CACHE.move_to_end(key)
            return _CACHE[key]
    prob = LocalProblem(spec, grid)
    with _CACHE_LOCK:
        _CACHE[key] = prob
        while len(_CACHE) > _CACHE_SIZE:
            _CACHE.popitem(last=False)
    return prob


@dataclass
class DiscreteSystem:
    """The nonlinear algebraic system for one value of mu."""

    problem: LocalProblem
    mu: float

    def residual(self, v) -> np.ndarray:
        return self.problem.residual(np.asarray(v, dtype=float), self.mu)

    def jacobian(self, v) -> sp.csr_matrix:
        return self.problem.jacobian(np.asarray(v, dtype=float))


def discretize(spec: ProblemSpec, grid: Grid, mu: float) -> DiscreteSystem:
    return DiscreteSystem(local_problem(spec, grid), float(mu))


def solve_local_dirichlet(
    spec: ProblemSpec,
    grid: Grid,
    mu: float,
    cfg: NewtonConfig | None = None,
    warm_start: GridFunction | None = None,
) -> GridFunction:
    return local_problem(spec, grid).solve(float(mu), cfg, warm_start)


# ---------------------------------------------------------------- dense oracle

DENSE_LIMIT = 2000


def solve_dense_oracle(spec: ProblemSpec, grid: Grid, mu: float, max_iters: int = 50) -> GridFunction:
    """Reference solve of the same discrete system: node-by-node assembly, dense LU.

    Written independently of :class:`LocalProblem` so the two can check each other.
    """
    if grid.size > DENSE_LIMIT:
        raise GridTooLarge(f"dense oracle limited to {DENSE_LIMIT} nodes, got {grid.size}")
    shape = grid.shape
    dim = grid.dim
    h = grid.spacing
    nl = spec.nonlinearity
    lam = spec.lam
    pts = grid.points
    sigma = spec.nonlocal_bc.sigma(grid)
    g = spec.boundary_data.at(pts)
    is_bnd = grid.boundary_mask

    # flux coefficients per interior node: list of (neighbour, coefficient)
    stencil = {}
    for flat in range(grid.size):
        if is_bnd[flat]:
            continue
        idx = np.unravel_index(flat, shape)
        entries = []
        for k in range(dim):
            for sgn in (+1, -1):
                nb = list(idx)
                nb[k] += sgn
                mid = pts[flat].copy()
                mid[k] += sgn * h[k] / 2
                coef = float(spec.diffusion.at(mid[None, :])[0]) / h[k] ** 2
                entries.append((int(np.ravel_multi_index(nb, shape)), coef))
        stencil[flat] = entries

    def F(v):
        out = np.empty(grid.size)
        for i in range(grid.size):
            if is_bnd[i]:
                out[i] = v[i] - (g[i] + sigma[i] * mu)
            else:
                flux = sum(c * (v[i] - v[j]) for j, c in stencil[i])
                out[i] = flux + lam * float(nl.value(pts[i][None, :], v[i])[0])
        return out

    def J(v):
        M = np.zeros((grid.size, grid.size))
        for i in range(grid.size):
            if is_bnd[i]:
                M[i, i] = 1.0
                continue
            for j, c in stencil[i]:
                M[i, i] += c
                M[i, j] -= c
            M[i, i] += lam * float(nl.ds(pts[i][None, :], v[i])[0])
        return M

    v = nl.root.at(pts)
    v[is_bnd] = g[is_bnd] + sigma[is_bnd] * mu
    R = F(v)
    for it in range(max_iters):
        dv = np.linalg.solve(J(v), -R)
        t = 1.0
        while True:
            trial = v + t * dv
            R_t = F(trial)
            if np.linalg.norm(R_t) <= (1 - 1e-4 * t) * np.linalg.norm(R) or t < 2.0**-20:
                break
            t /= 2
        v, R = trial, R_t
        if np.abs(dv).max() * t <= 1e-14 * max(1.0, np.abs(v).max()):
            return GridFunction(grid, v, residual=float(np.abs(R).max()), iterations=it + 1)
    raise NonConvergence("dense Newton did not converge", GridFunction(grid, v), float(np.abs(R).max()))


# ---------------------------------------------------------------- resolution rule


def recommended_resolution(domain: Domain, lam: float, nodes_per_layer: int = 10) -> tuple[int, ...]:
    """Smallest 2^k + 1 nodes per axis putting ``nodes_per_layer`` nodes across a 1/sqrt(lam) layer."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    target = 1.0 / (nodes_per_layer * math.sqrt(lam))
    lo, hi = 65, (8193 if domain.dim == 1 else 2049)
    out = []
    for length in domain.lengths:
        n = 3
        while length / (n - 1) > target * (1 + 1e-12) and n < hi:
            n = 2 * (n - 1) + 1
        out.append(min(max(n, lo), hi))
    return tuple(out)
