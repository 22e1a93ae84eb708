"""The scalar map T(mu) = B(v_mu(xi_1), ..., int w Phi(v_mu)) and its fixed points.

A fixed point mu* of T turns the local solution v_mu* into a solution of the
nonlocal problem. Two strategies find them: Picard iteration (converges to
attracting fixed points) and a bracketed scan of F(mu) = T(mu) - mu over
[-bracket, bracket] followed by bisection (finds repelling ones too).
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from .expr import EvaluationError, Expression, evaluate
from .fields import ScalarField
from .geometry import DomainError, Grid
from .local_solver import GridFunction, NewtonConfig, local_problem
from .problem import NonlocalFunctional, ProblemSpec

__all__ = [
    "FixedPointConfig",
    "Root",
    "FixedPointResult",
    "TMap",
    "interpolate_at",
    "integral_term",
    "evaluate_T",
    "fixed_point_solve",
    "estimate_contraction",
    "compute_B_of_h",
    "NonlocalFunctional",
]

log = logging.getLogger(__name__)

STRATEGIES = ("picard", "bracket", "auto")
CONVERGED, DIVERGED, NO_ROOT = "Converged", "Diverged", "NoRootInBracket"
# |T'| thresholds for stability classification (finite-difference noise floor)
STABILITY_MARGIN = 1e-3


def interpolate_at(u: GridFunction, x) -> float:
    """Piecewise (bi)linear interpolation; exact at grid nodes."""
    grid = u.grid
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if not grid.domain.contains(x):
        raise DomainError(f"interpolation point {tuple(x)} is outside the domain")
    idx, frac = [], []
    for k in range(grid.dim):
        lo = grid.domain.bounds[k][0]
        pos = (x[k] - lo) / grid.spacing[k]
        near = round(pos)
        if abs(pos - near) <= 1e-12 * max(1.0, abs(pos)):
            pos = float(near)
        i = min(int(math.floor(pos)), grid.shape[k] - 2)
        idx.append(i)
        frac.append(pos - i)
    arr = u.array
    if grid.dim == 1:
        (i,), (t,) = idx, frac
        if t == 0.0:
            return float(arr[i])
        return float((1 - t) * arr[i] + t * arr[i + 1])
    (i, j), (t, s) = idx, frac
    out = 0.0
    for di, wi in ((0, 1 - t), (1, t)):
        for dj, wj in ((0, 1 - s), (1, s)):
            w = wi * wj
            if w != 0.0:
                out += w * arr[i + di, j + dj]
    return float(out)


def integral_term(u: GridFunction, w: ScalarField, transform: Expression) -> float:
    """Trapezoidal approximation of the integral of w * Phi(u) over the domain."""
    grid = u.grid
    wv = w.on(grid)
    try:
        phi = evaluate(transform, {"s": u.values})
    except EvaluationError as exc:
        bad = _first_bad_node(u.values, transform)
        where = f" at node {tuple(grid.points[bad])} (u = {u.values[bad]:.6g})" if bad is not None else ""
        raise EvaluationError(f"transform failed{where}: {exc}") from exc
    return float(grid.quadrature_weights() @ (wv * phi))


def _first_bad_node(values, transform):
    for k, s in enumerate(values):
        try:
            evaluate(transform, {"s": s})
        except EvaluationError:
            return k
    return None


def apply_functional(spec: ProblemSpec, u: GridFunction) -> float:
    """B evaluated on a grid function."""
    nl = spec.nonlocal_bc
    s = [interpolate_at(u, p) for p in nl.points]
    integral = integral_term(u, nl.weight, nl.transform) if nl.uses_integral else 0.0
    return nl.combine(s, integral)


def compute_B_of_h(spec: ProblemSpec, grid: Grid) -> float:
    """B on the root profile h (point values exact, integral by quadrature)."""
    return spec.b_of_h(grid)


class TMap:
    """T(mu) on a fixed grid, remembering the last local solution for warm starts."""

    def __init__(self, spec: ProblemSpec, grid: Grid, newton: NewtonConfig | None = None):
        self.spec = spec
        self.grid = grid
        self.newton = newton or NewtonConfig()
        self.problem = local_problem(spec, grid)
        self.last: GridFunction | None = None
        self.evaluations = 0

    def solve(self, mu: float, warm: bool = True) -> GridFunction:
        v = self.problem.solve(float(mu), self.newton, self.last if warm else None)
        self.last = v
        return v

    def __call__(self, mu: float, warm: bool = True) -> float:
        self.evaluations += 1
        return apply_functional(self.spec, self.solve(mu, warm))


def evaluate_T(spec: ProblemSpec, grid: Grid, mu: float, cfg: NewtonConfig | None = None) -> float:
    return TMap(spec, grid, cfg)(mu, warm=False)


def estimate_contraction(
    spec: ProblemSpec, grid: Grid, mu_center: float, probe: float, cfg: NewtonConfig | None = None
) -> float:
    """Symmetric-difference Lipschitz estimate |T(c + p) - T(c - p)| / 2p."""
    if not probe > 0:
        raise ValueError("probe must be positive")
    T = TMap(spec, grid, cfg)
    return abs(T(mu_center + probe) - T(mu_center - probe)) / (2 * probe)


@dataclass(frozen=True)
class FixedPointConfig:
    strategy: str = "auto"
    mu0: float | None = None  # None: B[h]
    fp_tol: float = 1e-10
    max_iters: int = 200
    bracket: float | None = None  # None: 10 (1 + |B[h]|)
    scan_points: int = 256
    divergence_bound: float = 1e6

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}, got {self.strategy!r}")
        if not self.fp_tol > 0:
            raise ValueError("fp_tol must be positive")
        if self.max_iters < 1 or self.scan_points < 2:
            raise ValueError("max_iters >= 1 and scan_points >= 2 required")


@dataclass
class Root:
    mu: float
    u: GridFunction
    residual: float
    stability: str
    slope: float  # steeper one-sided difference slope of T at mu
    history: list[float] = field(default_factory=list)


@dataclass
class FixedPointResult:
    roots: list[Root]
    status: str
    contraction_estimate: float
    strategy: str
    bracket: float
    b_of_h: float
    picard_history: list[float] = field(default_factory=list)
    picard_status: str | None = None
    scan_mu: np.ndarray | None = None
    scan_F: np.ndarray | None = None
    evaluations: int = 0

    @property
    def mu(self) -> float:
        if len(self.roots) != 1:
            raise ValueError(f"{len(self.roots)} roots; pick one explicitly")
        return self.roots[0].mu


def _tol(fp: FixedPointConfig, mu: float) -> float:
    return fp.fp_tol * (1 + abs(mu))


def _classify(T: TMap, mu: float, t_mu: float):
    step = 1e-4 * (1 + abs(mu))
    left = (t_mu - T(mu - step)) / step
    right = (T(mu + step) - t_mu) / step
    # one-sided slopes catch kinks (e.g. sqrt at 0) that a centred difference hides
    steep = max(abs(left), abs(right))
    if steep < 1 - STABILITY_MARGIN:
        kind = "attracting"
    elif steep > 1 + STABILITY_MARGIN:
        kind = "repelling"
    else:
        kind = "marginal"
    return kind, left if abs(left) >= abs(right) else right


def _finish_root(T: TMap, mu: float, history) -> Root:
    u = T.solve(mu, warm=False)
    t_mu = apply_functional(T.spec, u)
    T.evaluations += 1
    stability, slope = _classify(T, mu, t_mu)
    return Root(mu=float(mu), u=u, residual=abs(t_mu - mu), stability=stability, slope=slope,
                history=list(history))


def _picard(T: TMap, fp: FixedPointConfig, mu0: float):
    mu = mu0
    history = [mu]
    last_step = math.inf
    status = DIVERGED
    for _ in range(fp.max_iters):
        nxt = T(mu)
        history.append(nxt)
        if not math.isfinite(nxt) or abs(nxt) > fp.divergence_bound:
            break
        step = abs(nxt - mu)
        if step <= _tol(fp, mu):
            status = CONVERGED
            mu = nxt
            break
        last_step = step
        mu = nxt
    log.debug("picard %s after %d iterations (last step %.3g)", status, len(history) - 1, last_step)
    return status, mu, history


def _bisect(F, lo, f_lo, hi, f_hi, fp):
    history = []
    mid, f_mid = (lo, f_lo) if abs(f_lo) < abs(f_hi) else (hi, f_hi)
    for _ in range(200):
        m = 0.5 * (lo + hi)
        if m in (lo, hi):
            break
        fm = F(m)
        history.append(m)
        if abs(fm) < abs(f_mid):
            mid, f_mid = m, fm
        if fm == 0:
            break
        if (fm > 0) == (f_lo > 0):
            lo, f_lo = m, fm
        else:
            hi, f_hi = m, fm
        if hi - lo <= _tol(fp, m) and abs(f_mid) <= _tol(fp, mid):
            break
    return mid, f_mid, history


def _scan(T: TMap, fp: FixedPointConfig, bracket: float, b_of_h: float):
    mus = np.linspace(-bracket, bracket, fp.scan_points)
    extra = [0.0, float(np.clip(b_of_h, -bracket, bracket))]
    mus = np.unique(np.concatenate([mus, extra]))
    # scan points are independent solves; cold starts keep F exact where v is (e.g. v = h)
    F = lambda m: T(m, warm=False) - m  # noqa: E731
    Fv = np.array([F(m) for m in mus])
    found = []  # (mu, |F|, history)
    tol = np.array([_tol(fp, m) for m in mus])
    zero = np.abs(Fv) <= tol
    for i in np.flatnonzero(zero):
        found.append((mus[i], abs(Fv[i]), []))
    sign = np.sign(Fv)
    sign[zero] = 0
    crossing = np.zeros(len(mus), dtype=bool)
    for i in range(len(mus) - 1):
        if sign[i] * sign[i + 1] < 0:
            crossing[i] = crossing[i + 1] = True
            mu, fmu, hist = _bisect(F, mus[i], Fv[i], mus[i + 1], Fv[i + 1], fp)
            if abs(fmu) <= _tol(fp, mu):
                found.append((mu, abs(fmu), hist))
            else:
                log.warning("sign change in [%g, %g] did not refine to a root (|F| = %.3g)",
                            mus[i], mus[i + 1], abs(fmu))
    # touching roots: local minima of |F| without a sign change
    absF = np.abs(Fv)
    for i in range(1, len(mus) - 1):
        if zero[i - 1: i + 2].any() or crossing[i - 1: i + 2].any():
            continue
        if absF[i] <= absF[i - 1] and absF[i] <= absF[i + 1]:
            res = minimize_scalar(lambda m: abs(F(m)), bounds=(mus[i - 1], mus[i + 1]),
                                  method="bounded", options={"xatol": fp.fp_tol})
            if abs(F(res.x)) <= _tol(fp, res.x):
                found.append((float(res.x), abs(F(res.x)), []))
    return mus, Fv, found


def _dedupe(found, fp):
    found = sorted(found, key=lambda r: r[0])
    out = []
    for item in found:
        if out and abs(item[0] - out[-1][0]) <= 1e3 * fp.fp_tol:
            if item[1] < out[-1][1]:
                out[-1] = item
            continue
        out.append(item)
    return out


def fixed_point_solve(
    spec: ProblemSpec,
    grid: Grid,
    fp: FixedPointConfig | None = None,
    newton: NewtonConfig | None = None,
) -> FixedPointResult:
    """Find fixed points of T with the configured strategy; every root carries v_mu*."""
    fp = fp or FixedPointConfig()
    T = TMap(spec, grid, newton)
    b_of_h = compute_B_of_h(spec, grid)
    bracket = fp.bracket if fp.bracket is not None else 10.0 * (1.0 + abs(b_of_h))
    if not bracket > abs(b_of_h):
        raise ValueError(f"bracket {bracket} must exceed |B[h]| = {abs(b_of_h)}")
    mu0 = b_of_h if fp.mu0 is None else float(fp.mu0)

    result = FixedPointResult(roots=[], status=NO_ROOT, contraction_estimate=float("nan"),
                              strategy=fp.strategy, bracket=bracket, b_of_h=b_of_h)
    if fp.strategy in ("picard", "auto"):
        status, mu, history = _picard(T, fp, mu0)
        result.picard_history = history
        result.picard_status = status
        if status == CONVERGED:
            root = _finish_root(T, mu, history)
            result.roots = [root]
            result.status = CONVERGED
            steps = np.abs(np.diff(history))
            if len(steps) >= 2 and steps[-2] > 0:
                result.contraction_estimate = float(steps[-1] / steps[-2])
            else:
                result.contraction_estimate = abs(root.slope)
            result.evaluations = T.evaluations
            return result
        if fp.strategy == "picard":
            result.status = DIVERGED
            result.evaluations = T.evaluations
            return result

    mus, Fv, found = _scan(T, fp, bracket, b_of_h)
    result.scan_mu, result.scan_F = mus, Fv
    roots = [_finish_root(T, mu, hist) for mu, _, hist in _dedupe(found, fp)]
    result.roots = roots
    result.status = CONVERGED if roots else NO_ROOT
    if roots:
        result.contraction_estimate = max(abs(r.slope) for r in roots)
    result.evaluations = T.evaluations
    return result
