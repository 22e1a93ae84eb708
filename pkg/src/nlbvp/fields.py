"""Coefficient fields and nonlinearities built on the expression language."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .expr import (
    EvaluationError,
    Expression,
    Num,
    differentiate,
    evaluate,
    parse_expression,
    to_source,
)
from .geometry import Grid

__all__ = [
    "FieldError",
    "ScalarField",
    "Nonlinearity",
    "NonlinearityReport",
    "validate_nonlinearity",
    "fd_derivative_error",
    "PRESETS",
    "preset",
]

SPACE_VARS = ("x", "y")


class FieldError(ValueError):
    pass


def _coords(points) -> dict:
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    return {SPACE_VARS[k]: pts[:, k] for k in range(pts.shape[1])}


@dataclass(frozen=True)
class ScalarField:
    expr: Expression
    declared_positive: bool = False

    @classmethod
    def parse(cls, source: str, positive: bool = False) -> "ScalarField":
        return cls(parse_expression(source, variables=SPACE_VARS), positive)

    @classmethod
    def constant(cls, value: float, positive: bool = False) -> "ScalarField":
        return cls.parse(repr(float(value)) if value >= 0 else f"-{-float(value)!r}", positive)

    @property
    def source(self) -> str:
        return to_source(self.expr)

    def at(self, points) -> np.ndarray:
        """Values at an (npts, dim) array of points."""
        env = _coords(points)
        n = len(next(iter(env.values())))
        return np.broadcast_to(np.asarray(evaluate(self.expr, env), dtype=float), (n,)).copy()

    def on(self, grid: Grid) -> np.ndarray:
        values = self.at(grid.points)
        if self.declared_positive and not np.all(values > 0):
            bad = np.flatnonzero(values <= 0)[0]
            raise FieldError(
                f"field {self.source!r} must be positive, is {values[bad]} at {tuple(grid.points[bad])}"
            )
        return values


@dataclass(frozen=True)
class Nonlinearity:
    """f(x, s) with its s-derivative, the positivity constant theta0 and root profile h."""

    f: Expression
    f_s: Expression
    theta0: float
    root: ScalarField

    @classmethod
    def parse(cls, f: str, h: str, theta0: float, f_s: str | None = None) -> "Nonlinearity":
        fe = parse_expression(f, variables=SPACE_VARS + ("s",))
        fse = differentiate(fe, "s") if f_s is None else parse_expression(f_s, SPACE_VARS + ("s",))
        return cls(fe, fse, float(theta0), ScalarField.parse(h))

    def _env(self, points, s):
        env = _coords(points)
        env["s"] = np.asarray(s, dtype=float)
        return env

    def value(self, points, s) -> np.ndarray:
        out = evaluate(self.f, self._env(points, s))
        return np.broadcast_to(out, np.broadcast(np.asarray(s), _coords(points)["x"]).shape).copy()

    def ds(self, points, s) -> np.ndarray:
        out = evaluate(self.f_s, self._env(points, s))
        return np.broadcast_to(out, np.broadcast(np.asarray(s), _coords(points)["x"]).shape).copy()


@dataclass
class NonlinearityReport:
    passed: bool
    min_f_s: float
    theta0: float
    max_root_residual: float
    max_fd_error: float
    s_range: tuple[float, float]
    notes: list[str] = field(default_factory=list)


ROOT_TOL = 1e-10
FD_TOL = 1e-6


def fd_derivative_error(nl: Nonlinearity, points, s) -> np.ndarray:
    """Relative mismatch between f_s and centred differences of f."""
    s = np.asarray(s, dtype=float)
    eps = 1e-6 * np.maximum(1.0, np.abs(s))
    fd = (nl.value(points, s + eps) - nl.value(points, s - eps)) / (2 * eps)
    exact = nl.ds(points, s)
    return np.abs(exact - fd) / np.maximum(1.0, np.abs(exact))


def _sample_points(grid: Grid, limit: int = 4096) -> np.ndarray:
    stride = max(1, grid.size // limit)
    return grid.points[::stride]


def validate_nonlinearity(nl: Nonlinearity, grid: Grid, s_range, n_s: int = 41) -> NonlinearityReport:
    """Sampled check of f_s >= theta0, f(x, h(x)) = 0 and f_s against finite differences.

    Large grids are subsampled for the s-sweep; the root condition is checked on every node.
    """
    lo, hi = map(float, s_range)
    if not lo <= hi:
        raise FieldError(f"empty s-range ({lo}, {hi})")
    pts = _sample_points(grid)
    s = np.linspace(lo, hi, n_s)
    P = np.repeat(pts, n_s, axis=0)
    S = np.tile(s, len(pts))
    try:
        fs = nl.ds(P, S)
        fd_err = fd_derivative_error(nl, P, S)
        h = nl.root.on(grid)
        root_res = np.abs(nl.value(grid.points, h))
    except EvaluationError as exc:
        raise FieldError(f"invalid nonlinearity: {exc}") from exc
    report = NonlinearityReport(
        passed=True,
        min_f_s=float(fs.min()),
        theta0=nl.theta0,
        max_root_residual=float(root_res.max()),
        max_fd_error=float(fd_err.max()),
        s_range=(lo, hi),
    )
    if nl.theta0 <= 0:
        report.notes.append("theta0 must be positive")
    if report.min_f_s < nl.theta0:
        report.notes.append(f"min f_s = {report.min_f_s:.6g} < theta0 = {nl.theta0:.6g}")
    if report.max_root_residual > ROOT_TOL:
        report.notes.append(f"|f(x, h(x))| reaches {report.max_root_residual:.3g}")
    if report.max_fd_error > FD_TOL:
        report.notes.append(f"f_s disagrees with finite differences by {report.max_fd_error:.3g}")
    report.passed = not report.notes
    return report


# name -> (f template, f_s template); {a} is the positive rate, {h} the root profile
PRESETS = {
    "linear": ("({a})*(s - ({h}))", "{a}"),
    "cubic": ("({a})*((s - ({h})) + (s - ({h}))^3)", "({a})*(1 + 3*(s - ({h}))^2)"),
    "sinh": ("({a})*sinh(s - ({h}))", "({a})*cosh(s - ({h}))"),
}


def preset(name: str, h: str, a: str = "1", theta0: float | None = None, grid: Grid | None = None) -> Nonlinearity:
    """Build a catalog nonlinearity f = a(x) * phi(s - h(x)) with an explicit f_s.

    theta0 defaults to min a over ``grid`` (a constant rate needs no grid).
    """
    try:
        f_t, fs_t = PRESETS[name]
    except KeyError:
        raise FieldError(f"unknown preset {name!r}; choose from {sorted(PRESETS)}") from None
    if theta0 is None:
        rate = ScalarField.parse(a, positive=True)
        if grid is None:
            if not isinstance(rate.expr, Num):
                raise FieldError("theta0 for a variable rate needs a grid")
            theta0 = float(rate.expr.value)
        else:
            theta0 = float(rate.on(grid).min())
    return Nonlinearity.parse(f_t.format(a=a, h=h), h, theta0, f_s=fs_t.format(a=a, h=h))
