"""Empirical checks of the large-lambda behaviour on computed solutions.

Each check returns a :class:`CheckResult` with a status out of ``pass``,
``fail``, ``hypothesis-unmet`` and ``not-applicable``. The two non-verdict
statuses separate "the theorem does not speak here" from "the numbers
contradict it". No existential constant from the theory is hard-coded; every
threshold is structural (monotone decay, slope signs, explicit slack).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .fields import ScalarField
from .geometry import Grid, interior_region
from .local_solver import GridFunction, NewtonConfig, recommended_resolution, solve_local_dirichlet
from .nonlocal_bc import FixedPointConfig, FixedPointResult, estimate_contraction, fixed_point_solve
from .problem import ProblemSpec

__all__ = [
    "SCHEMA_VERSION",
    "PASS",
    "FAIL",
    "UNMET",
    "NOT_APPLICABLE",
    "InsufficientSignal",
    "DecayFit",
    "CheckResult",
    "VerificationReport",
    "Run",
    "select_root",
    "solve_runs",
    "check_interior_limit",
    "check_boundary_limit",
    "fit_layer_decay",
    "check_mu_monotonicity",
    "check_maximum_principle",
    "check_contraction_decay",
]

SCHEMA_VERSION = 1
PASS, FAIL, UNMET, NOT_APPLICABLE = "pass", "fail", "hypothesis-unmet", "not-applicable"

INTERIOR_FLOOR = 1e-6  # absorbs discretisation error in the interior limit
MONOTONE_SLACK = 1e-8
MIN_R2 = 0.9
MIN_FIT_SAMPLES = 3


class InsufficientSignal(ValueError):
    """Too few nodes sit above the noise floor to fit an exponential profile."""


# ---------------------------------------------------------------- results


def _jsonable(value):
    if isinstance(value, dict):
        return {str(k): _jsonable(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [_jsonable(v) for v in value]
    if isinstance(value, (np.bool_, bool)):
        return bool(value)
    if isinstance(value, (np.integer, int)):
        return int(value)
    if isinstance(value, (np.floating, float)):
        v = float(value)
        if math.isnan(v):
            return "nan"
        if math.isinf(v):
            return "inf" if v > 0 else "-inf"
        return v
    return value


@dataclass
class CheckResult:
    name: str
    status: str
    measured: dict = field(default_factory=dict)
    thresholds: dict = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)

    @property
    def passed(self) -> bool:
        """True unless the numbers contradict the claim (unmet hypotheses are not failures)."""
        return self.status != FAIL

    def to_dict(self) -> dict:
        return _jsonable(
            {"name": self.name, "status": self.status, "measured": self.measured,
             "thresholds": self.thresholds, "notes": list(self.notes)}
        )


@dataclass
class VerificationReport:
    spec_id: str
    checks: list[CheckResult] = field(default_factory=list)

    def add(self, check: CheckResult, spec_id: str | None = None) -> CheckResult:
        if spec_id is not None and spec_id != self.spec_id:
            raise ValueError("a report collects checks of a single problem")
        self.checks.append(check)
        return check

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def to_dict(self, timestamp: str | None = None) -> dict:
        out = {"schema_version": SCHEMA_VERSION, "spec": self.spec_id, "passed": self.passed,
               "checks": [c.to_dict() for c in self.checks]}
        if timestamp is not None:
            out["timestamp"] = timestamp
        return out

    def to_json(self, timestamp: str | None = None) -> str:
        return json.dumps(self.to_dict(timestamp), indent=2, sort_keys=True) + "\n"

    def table(self) -> str:
        width = max([len(c.name) for c in self.checks] + [5])
        lines = [f"{'check':<{width}}  status"]
        for c in self.checks:
            lines.append(f"{c.name:<{width}}  {c.status}")
            lines.extend(f"{'':<{width}}    {n}" for n in c.notes)
        return "\n".join(lines)


def spec_id(spec: ProblemSpec) -> str:
    """Identifier of a problem up to its lambda."""
    nl = spec.nonlinearity
    parts = [
        f"domain={[list(b) for b in spec.domain.bounds]}",
        f"D={spec.diffusion.source}",
        f"h={nl.root.source}",
        f"g={spec.boundary_data.source}",
        f"B={json.dumps(spec.nonlocal_bc.describe(), sort_keys=True)}",
    ]
    return "; ".join(parts)


# ---------------------------------------------------------------- runs


@dataclass(frozen=True)
class Run:
    """One selected solution of the nonlocal problem at a given lambda."""

    spec: ProblemSpec
    mu: float
    u: GridFunction
    selection: str = "unique"

    @property
    def lam(self) -> float:
        return self.spec.lam


def select_root(result: FixedPointResult, selection: str = "unique"):
    """Pick one root: 'unique', 'attracting', 'repelling', 'index:k' or 'nearest:value'."""
    roots = result.roots
    if not roots:
        raise ValueError(f"no root to select (status {result.status})")
    if selection == "unique":
        if len(roots) != 1:
            raise ValueError(f"{len(roots)} roots found; give an explicit selection")
        return roots[0]
    if selection in ("attracting", "repelling"):
        hits = [r for r in roots if r.stability == selection]
        if not hits:
            raise ValueError(f"no {selection} root among {[r.mu for r in roots]}")
        return hits[0]
    kind, _, arg = selection.partition(":")
    if kind == "index":
        return roots[int(arg)]
    if kind == "nearest":
        target = float(arg)
        return min(roots, key=lambda r: abs(r.mu - target))
    raise ValueError(f"unknown root selection {selection!r}")


def solve_runs(
    spec: ProblemSpec,
    lambdas,
    fp: FixedPointConfig | None = None,
    newton: NewtonConfig | None = None,
    selection: str = "unique",
    nodes_per_layer: int = 10,
) -> list[Run]:
    """Solve at each lambda on its recommended grid and keep the selected root."""
    runs = []
    for lam in sorted(float(v) for v in lambdas):
        s = spec.with_lambda(lam)
        grid = Grid(s.domain, recommended_resolution(s.domain, lam, nodes_per_layer))
        root = select_root(fixed_point_solve(s, grid, fp, newton), selection)
        runs.append(Run(s, root.mu, root.u, selection))
    return runs


def _check_runs(runs) -> list[Run]:
    if len(runs) < 3:
        raise ValueError(f"need at least 3 runs over lambda, got {len(runs)}")
    runs = sorted(runs, key=lambda r: r.lam)
    base = runs[0].spec
    for r in runs[1:]:
        if r.spec.with_lambda(base.lam) != base:
            raise ValueError("runs differ in more than lambda")
    if len({r.lam for r in runs}) != len(runs):
        raise ValueError("runs repeat a lambda value")
    return runs


def _decreasing(values, floor: float) -> bool:
    """Strictly decreasing, except that values already under ``floor`` may stall."""
    return all(b < a or b <= floor for a, b in zip(values, values[1:]))


# ---------------------------------------------------------------- limits


def check_interior_limit(runs, delta: float) -> CheckResult:
    """max over the delta-interior of |u - h| must shrink with lambda and end near zero."""
    runs = _check_runs(runs)
    lams, errs = [], []
    for r in runs:
        region = interior_region(r.u.grid, delta)
        if region.empty:
            raise ValueError(f"interior region for delta={delta} holds no nodes")
        idx = np.asarray(region.node_set)
        h = r.spec.nonlinearity.root.on(r.u.grid)
        lams.append(r.lam)
        errs.append(float(np.abs(r.u.values[idx] - h[idx]).max()))
    lam_max = lams[-1]
    bound = max(INTERIOR_FLOOR, 10.0 / lam_max)
    ok_mono = _decreasing(errs, INTERIOR_FLOOR)
    ok_final = errs[-1] <= bound
    notes = []
    if not ok_mono:
        notes.append("interior deviation is not strictly decreasing")
    if not ok_final:
        notes.append(f"e({lam_max:g}) = {errs[-1]:.3g} exceeds {bound:.3g}")
    return CheckResult(
        "interior_limit", PASS if ok_mono and ok_final else FAIL,
        measured={"lambda": lams, "error": errs, "delta": delta},
        thresholds={"final": bound, "floor": INTERIOR_FLOOR}, notes=notes,
    )


def check_boundary_limit(runs, spec: ProblemSpec | None = None) -> CheckResult:
    """max over sigma = 1 boundary nodes of |u - g - B[h]| must shrink to within 1e-2 (1 + |B[h]|)."""
    runs = _check_runs(runs)
    spec = spec or runs[0].spec
    if spec.nonlocal_bc.lipschitz_class != "global":
        return CheckResult(
            "boundary_limit", NOT_APPLICABLE,
            notes=["combiner is only locally Lipschitz; no boundary limit is predicted"],
        )
    lams, devs, bh = [], [], None
    for r in runs:
        grid = r.u.grid
        mask = (r.spec.nonlocal_bc.sigma(grid) == 1.0) & grid.boundary_mask
        if not mask.any():
            raise ValueError("no boundary node carries the nonlocal term")
        bh = r.spec.b_of_h(grid)
        g = r.spec.boundary_data.on(grid)
        lams.append(r.lam)
        devs.append(float(np.abs(r.u.values[mask] - g[mask] - bh).max()))
    bound = 1e-2 * (1 + abs(bh))
    floor = 1e-10 * (1 + abs(bh))
    ok_mono = _decreasing(devs, floor)
    ok_final = devs[-1] <= bound
    notes = []
    if not ok_mono:
        notes.append("boundary deviation is not decreasing")
    if not ok_final:
        notes.append(f"b({lams[-1]:g}) = {devs[-1]:.3g} exceeds {bound:.3g}")
    return CheckResult(
        "boundary_limit", PASS if ok_mono and ok_final else FAIL,
        measured={"lambda": lams, "deviation": devs, "B_of_h": bh,
                  "mu": [r.mu for r in runs], "selection": runs[0].selection},
        thresholds={"final": bound}, notes=notes,
    )


# ---------------------------------------------------------------- decay fits


@dataclass(frozen=True)
class DecayFit:
    """Least-squares line log|deviation| = intercept + slope * sqrt(lam) * dist."""

    samples: np.ndarray  # (n, 2): sqrt(lam) * dist, log deviation
    slope: float
    intercept: float
    r_squared: float

    @property
    def n(self) -> int:
        return len(self.samples)

    def summary(self) -> dict:
        return {"slope": self.slope, "intercept": self.intercept, "r_squared": self.r_squared,
                "samples": self.n}


def _line_fit(t: np.ndarray, y: np.ndarray) -> DecayFit:
    X = np.column_stack([t, np.ones_like(t)])
    (slope, intercept), *_ = np.linalg.lstsq(X, y, rcond=None)
    resid = y - (slope * t + intercept)
    ss_tot = float(((y - y.mean()) ** 2).sum())
    r2 = 1.0 - float((resid**2).sum()) / ss_tot if ss_tot > 0 else 1.0
    return DecayFit(np.column_stack([t, y]), float(slope), float(intercept), min(max(r2, 0.0), 1.0))


def _fit_profile(deviation: np.ndarray, grid: Grid, lam: float, mode: str = "envelope") -> DecayFit:
    """Fit log|deviation| against sqrt(lam) * depth over interior nodes above the 1/lam floor.

    ``envelope`` uses one sample per depth level delta, the maximum of |deviation| over
    nodes at depth >= delta (the quantity the layer estimate bounds). ``pointwise`` uses
    every node, which mixes boundary segments with different jump sizes.
    """
    if mode not in ("envelope", "pointwise"):
        raise ValueError("mode must be 'envelope' or 'pointwise'")
    floor = 10.0 * max(1.0 / lam, 1e-8)
    interior = ~grid.boundary_mask
    dist, dev = grid.distance[interior], np.abs(deviation[interior])
    if mode == "envelope":
        levels, inverse = np.unique(dist, return_inverse=True)
        level_max = np.zeros(len(levels))
        np.maximum.at(level_max, inverse, dev)
        dist, dev = levels, np.maximum.accumulate(level_max[::-1])[::-1]
    keep = dev > floor
    if keep.sum() < MIN_FIT_SAMPLES or np.ptp(dist[keep]) == 0:
        raise InsufficientSignal(
            f"{int(keep.sum())} samples exceed the floor {floor:.3g}; need {MIN_FIT_SAMPLES} at distinct depths"
        )
    return _line_fit(math.sqrt(lam) * dist[keep], np.log(dev[keep]))


def fit_layer_decay(u: GridFunction, h_field: ScalarField, lam: float, mode: str = "envelope") -> DecayFit:
    """Regress log|u - h| on sqrt(lam) * dist(x, boundary), ignoring values under 10 max(1/lam, 1e-8)."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    return _fit_profile(u.values - h_field.on(u.grid), u.grid, lam, mode)


def check_mu_monotonicity(
    spec: ProblemSpec,
    grid: Grid | None,
    mu_pair,
    lambda_list,
    cfg: NewtonConfig | None = None,
) -> CheckResult:
    """0 <= v_mu - v_mu_tilde <= mu - mu_tilde nodewise, with an exponentially decaying envelope.

    ``grid=None`` uses the recommended resolution at every lambda.
    """
    mu_t, mu = map(float, mu_pair)
    if not mu >= mu_t:
        raise ValueError("mu_pair must be ordered (mu_tilde, mu) with mu >= mu_tilde")
    ref = grid or Grid(spec.domain, recommended_resolution(spec.domain, min(lambda_list)))
    sigma = spec.nonlocal_bc.sigma(ref)[ref.boundary_mask]
    if not np.all(sigma == 1.0):
        return CheckResult("mu_monotonicity", NOT_APPLICABLE,
                           notes=["the envelope estimate assumes sigma = 1 on the whole boundary"])
    rows, ok, notes = [], True, []
    for lam in sorted(float(v) for v in lambda_list):
        s = spec.with_lambda(lam)
        g = grid or Grid(s.domain, recommended_resolution(s.domain, lam))
        lo = solve_local_dirichlet(s, g, mu_t, cfg)
        hi = solve_local_dirichlet(s, g, mu, cfg)
        diff = hi.values - lo.values
        row = {"lambda": lam, "min_diff": float(diff.min()), "max_diff": float(diff.max())}
        bounds_ok = diff.min() >= -MONOTONE_SLACK and diff.max() <= (mu - mu_t) + MONOTONE_SLACK
        if not bounds_ok:
            notes.append(f"nodal bounds violated at lambda={lam:g}")
        fit_ok = True
        if mu > mu_t:
            try:
                fit = _fit_profile(diff / (mu - mu_t), g, lam)
                row.update(fit.summary())
                fit_ok = fit.slope < 0 and fit.r_squared >= MIN_R2
                if not fit_ok:
                    notes.append(f"envelope fit at lambda={lam:g}: slope {fit.slope:.3g}, R2 {fit.r_squared:.3g}")
            except InsufficientSignal as exc:
                fit_ok = False
                notes.append(f"lambda={lam:g}: {exc}")
        else:
            notes.append("mu equals mu_tilde: difference vanishes, no envelope to fit")
        ok = ok and bounds_ok and fit_ok
        rows.append(row)
    return CheckResult(
        "mu_monotonicity", PASS if ok else FAIL,
        measured={"mu_tilde": mu_t, "mu": mu, "rows": rows},
        thresholds={"slack": MONOTONE_SLACK, "min_r_squared": MIN_R2}, notes=notes,
    )


# ---------------------------------------------------------------- maximum principle


def _max_principle_hypothesis(spec: ProblemSpec, grid: Grid, side: str):
    """Sign of g and the position of B[h] relative to the range of h; (met, notes)."""
    nl = spec.nonlocal_bc
    if nl.kind not in ("multipoint", "integral"):
        return False, [f"{nl.kind} combiner lies outside the multipoint/integral setting"]
    notes = []
    g = spec.boundary_data.on(grid)[grid.boundary_mask]
    h = spec.nonlinearity.root.on(grid)
    bh = spec.b_of_h(grid)
    if side == "max":
        sign_ok, window_ok = bool(g.min() >= 0), bh > h.max()
        if not sign_ok:
            notes.append("g takes negative values on the boundary")
        if not window_ok:
            notes.append(f"B[h] = {bh:.6g} does not exceed max h = {h.max():.6g}")
    else:
        sign_ok, window_ok = bool(g.max() <= 0), bh < h.min()
        if not sign_ok:
            notes.append("g takes positive values on the boundary")
        if not window_ok:
            notes.append(f"B[h] = {bh:.6g} is not below min h = {h.min():.6g}")
    return sign_ok and window_ok, notes


def check_maximum_principle(u: GridFunction, side: str = "max", spec: ProblemSpec | None = None) -> CheckResult:
    """Is the extreme value of u attained on the boundary? With ``spec`` the hypotheses are gated."""
    if side not in ("max", "min"):
        raise ValueError("side must be 'max' or 'min'")
    vals = u.values if side == "max" else -u.values
    bnd = u.grid.boundary_mask
    k = int(np.argmax(vals))
    scale = max(1.0, float(np.abs(u.values).max()))
    top_b, top_i = float(vals[bnd].max()), float(vals[~bnd].max())
    holds = bool(bnd[k]) or top_i <= top_b + 1e-10 * scale
    sgn = 1 if side == "max" else -1
    measured = {"side": side, "argext": [float(c) for c in u.grid.points[k]], "on_boundary": bool(bnd[k]),
                "boundary_extreme": sgn * top_b, "interior_extreme": sgn * top_i}
    notes = []
    status = PASS if holds else FAIL
    if spec is not None:
        met, notes = _max_principle_hypothesis(spec, u.grid, side)
        measured["hypothesis_met"] = met
        if not met:
            status = UNMET
            notes.append("principle " + ("holds" if holds else "fails") + " here, but is not predicted")
    elif not holds:
        notes.append("interior extreme exceeds the boundary extreme")
    return CheckResult(f"maximum_principle_{side}", status, measured=measured,
                       thresholds={"relative_slack": 1e-10}, notes=notes)


# ---------------------------------------------------------------- contraction


def check_contraction_decay(
    spec: ProblemSpec,
    lambda_list,
    probe: float = 1.0,
    center: float | None = None,
    final_bound: float = 1.0,
    nodes_per_layer: int = 10,
) -> CheckResult:
    """Measured Lipschitz constant of T must decrease strictly in lambda and end below ``final_bound``."""
    lams = sorted(float(v) for v in lambda_list)
    rates = []
    for lam in lams:
        s = spec.with_lambda(lam)
        grid = Grid(s.domain, recommended_resolution(s.domain, lam, nodes_per_layer))
        c = s.b_of_h(grid) if center is None else center
        rates.append(estimate_contraction(s, grid, c, probe))
    ok_mono = _decreasing(rates, 1e-12)
    ok_final = rates[-1] < final_bound
    notes = []
    if not ok_mono:
        notes.append("contraction estimate is not strictly decreasing")
    if not ok_final:
        notes.append(f"M({lams[-1]:g}) = {rates[-1]:.3g} is not below {final_bound:g}")
    return CheckResult(
        "contraction_decay", PASS if ok_mono and ok_final else FAIL,
        measured={"lambda": lams, "rate": rates, "probe": probe},
        thresholds={"final": final_bound}, notes=notes,
    )
