"""Flat ``section.key = value`` run configurations.

    # three-point problem at lambda = 100
    problem.domain = "(0, 1)"
    problem.f = "s"
    problem.h = "0"
    problem.theta0 = 1
    problem.g = "x"
    problem.lambda = 100
    nonlocal.kind = "multipoint"
    nonlocal.beta = "4"
    nonlocal.xi = "0.75"
    nonlocal.sides = "right"

Values are bare tokens or double-quoted strings; ``#`` starts a comment outside
quotes. Every error names the offending key and line.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, field, fields

from .expr import EvaluationError, ExpressionSyntaxError
from .fields import FieldError, Nonlinearity, ScalarField
from .geometry import Domain, DomainError
from .local_solver import NewtonConfig
from .nonlocal_bc import FixedPointConfig
from .problem import NonlocalFunctional, ProblemError, ProblemSpec

__all__ = ["ConfigError", "RunConfig", "parse_config", "load_config", "KEYS"]


class ConfigError(ValueError):
    def __init__(self, message: str, path: str | None = None, line: int | None = None):
        where = []
        if line is not None:
            where.append(f"line {line}")
        if path is not None:
            where.append(path)
        prefix = f"config error ({', '.join(where)})" if where else "config error"
        super().__init__(f"{prefix}: {message}")
        self.path = path
        self.line = line


_FP_KEYS = {f.name for f in fields(FixedPointConfig)}
_NEWTON_KEYS = {f.name for f in fields(NewtonConfig)}

# key -> one-line description (also drives validation of unknown keys)
KEYS = {
    "problem.domain": 'interval "(a, b)" or rectangle "(a, b) x (c, d)"',
    "problem.D": "diffusion D(x[, y]) > 0 (default 1)",
    "problem.f": "nonlinearity f(x[, y], s)",
    "problem.f_s": "derivative of f in s (default: symbolic)",
    "problem.h": "root profile h(x[, y]) with f(x, h(x)) = 0",
    "problem.theta0": "lower bound of f_s",
    "problem.g": "boundary data g(x[, y]) (default 0)",
    "problem.lambda": "lambda > 0 for solve and single-lambda checks",
    "nonlocal.kind": "multipoint | integral | affine | expression",
    "nonlocal.beta": 'point coefficients, e.g. "4" or "(0.5, -1)"',
    "nonlocal.xi": 'interior points: 1D "0.75" or "(0.25, 0.75)"; 2D "(0.5, 0.5)" or "(0.2, 0.3); (0.7, 0.5)"',
    "nonlocal.gamma": "integral coefficient of the affine combiner",
    "nonlocal.expr": "combiner expression in s1..sm and I",
    "nonlocal.w": "integral weight w(x[, y])",
    "nonlocal.phi": "integral transform Phi(s)",
    "nonlocal.sides": 'boundary sides carrying the nonlocal term, "all" or e.g. "right"',
    "grid.nodes": 'nodes per axis, "auto" or e.g. "129" / "65, 65"',
    "grid.nodes_per_layer": "resolution rule parameter for auto grids (default 10)",
    "sweep.from": "first lambda of a geometric sweep",
    "sweep.to": "last lambda (inclusive up to rounding)",
    "sweep.factor": "ratio between consecutive lambdas (> 1)",
    "verify.delta": "interior region depth (default 0.25)",
    "verify.selection": "root selection for limits: unique | attracting | repelling | index:k | nearest:v",
    "verify.mu_pair": 'monotonicity pair "(mu_tilde, mu)" (default "(0, 1)")',
    "verify.probe": "contraction probe half-width (default 1)",
    "verify.contraction_bound": "largest admissible final contraction estimate (default 1)",
    "analytic.kind": "example22 branch: sqrt | quadratic",
    "analytic.s_max": "upper end of the eta root search (default 50)",
    "analytic.points": "number of closed-form samples (default 101)",
}
_SETTING_HELP = {
    "fixed_point.strategy": "picard | bracket | auto (Picard, then a bracket scan on failure)",
    "fixed_point.mu0": "Picard starting value (default B[h])",
    "fixed_point.fp_tol": "fixed-point tolerance, scaled by 1 + |mu| (default 1e-10)",
    "fixed_point.max_iters": "Picard iteration limit (default 200)",
    "fixed_point.bracket": "scan half-width Lambda (default 10 (1 + |B[h]|))",
    "fixed_point.scan_points": "uniform scan points on [-Lambda, Lambda] (default 256)",
    "fixed_point.divergence_bound": "Picard gives up once |mu| exceeds this (default 1e6)",
    "newton.residual_tol": "max-norm residual target (default 1e-10 lambda theta0)",
    "newton.max_iters": "Newton iteration limit (default 50)",
    "newton.backtrack": "step shrink factor of the line search (default 0.5)",
    "newton.min_step": "smallest damped step before giving up (default 2^-20)",
    "newton.cg_rtol": "relative tolerance of the 2D conjugate-gradient solve (default 1e-12)",
    "newton.cg_maxiter": "conjugate-gradient iteration limit (default max(1000, 200 sqrt(n)))",
}
KEYS.update({f"fixed_point.{k}": "fixed-point engine setting" for k in _FP_KEYS})
KEYS.update({f"newton.{k}": "Newton solver setting" for k in _NEWTON_KEYS})
KEYS.update({k: v for k, v in _SETTING_HELP.items() if k in KEYS})

_LINE = re.compile(r"^\s*([A-Za-z_]\w*(?:\.[A-Za-z_]\w*)+)\s*=\s*(.*?)\s*$")


def _strip_comment(text: str) -> str:
    quoted = False
    for i, ch in enumerate(text):
        if ch == '"':
            quoted = not quoted
        elif ch == "#" and not quoted:
            return text[:i]
    return text


def parse_config(text: str) -> dict[str, tuple[str, int]]:
    """key -> (raw value, line number). Unknown or repeated keys are errors."""
    out: dict[str, tuple[str, int]] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = _strip_comment(raw).strip()
        if not line:
            continue
        m = _LINE.match(line)
        if not m:
            raise ConfigError(f"expected 'section.key = value', got {raw.strip()!r}", line=lineno)
        key, value = m.groups()
        if key not in KEYS:
            raise ConfigError("unknown key", path=key, line=lineno)
        if key in out:
            raise ConfigError(f"repeated key (first set on line {out[key][1]})", path=key, line=lineno)
        if value.startswith('"'):
            if len(value) < 2 or not value.endswith('"') or '"' in value[1:-1]:
                raise ConfigError("unterminated or malformed string", path=key, line=lineno)
            value = value[1:-1]
        elif not value:
            raise ConfigError("missing value", path=key, line=lineno)
        out[key] = (value, lineno)
    return out


# ---------------------------------------------------------------- typed access


class _Reader:
    def __init__(self, entries: dict[str, tuple[str, int]]):
        self.entries = entries

    def has(self, key: str) -> bool:
        return key in self.entries

    def error(self, key: str, message: str) -> ConfigError:
        line = self.entries[key][1] if key in self.entries else None
        return ConfigError(message, path=key, line=line)

    def str(self, key: str, default=None, required: bool = False):
        if key not in self.entries:
            if required:
                raise ConfigError("required key is missing", path=key)
            return default
        return self.entries[key][0]

    def float(self, key: str, default=None, required: bool = False):
        raw = self.str(key, None, required)
        if raw is None:
            return default
        try:
            value = float(raw)
        except ValueError:
            raise self.error(key, f"expected a number, got {raw!r}") from None
        if not math.isfinite(value):
            raise self.error(key, "value must be finite")
        return value

    def int(self, key: str, default=None):
        raw = self.str(key)
        if raw is None:
            return default
        try:
            return int(raw)
        except ValueError:
            raise self.error(key, f"expected an integer, got {raw!r}") from None

    def numbers(self, key: str, default=None) -> tuple[float, ...] | None:
        raw = self.str(key)
        if raw is None:
            return default
        return _numbers(raw, lambda msg: self.error(key, msg))


def _numbers(raw: str, err) -> tuple[float, ...]:
    body = raw.strip()
    if body.startswith("(") and body.endswith(")"):
        body = body[1:-1]
    parts = [p.strip() for p in body.split(",")]
    try:
        vals = tuple(float(p) for p in parts)
    except ValueError:
        raise err(f"expected comma-separated numbers, got {raw!r}") from None
    if not all(math.isfinite(v) for v in vals):
        raise err("numbers must be finite")
    return vals


def _domain(raw: str, err) -> Domain:
    pieces = [p for p in re.split(r"\)\s*x\s*\(", raw.strip())]
    if len(pieces) == 1:
        lo, hi = _pair(raw, err)
        return Domain.interval(lo, hi)
    if len(pieces) == 2:
        return Domain.rectangle(_pair(pieces[0] + ")", err), _pair("(" + pieces[1], err))
    raise err("only intervals and rectangles are supported")


def _pair(raw: str, err):
    vals = _numbers(raw, err)
    if len(vals) != 2:
        raise err(f"expected a (low, high) pair, got {raw!r}")
    return vals


def _points(raw: str, dim: int, err) -> list[tuple[float, ...]]:
    if dim == 1:
        return [(v,) for v in _numbers(raw, err)]
    pts = []
    for chunk in raw.split(";"):
        p = _numbers(chunk, err)
        if len(p) != 2:
            raise err(f"2D points need two coordinates, got {chunk.strip()!r}")
        pts.append(p)
    return pts


# ---------------------------------------------------------------- run config


@dataclass
class RunConfig:
    spec: ProblemSpec
    nodes: tuple[int, ...] | None  # None: recommended resolution
    nodes_per_layer: int = 10
    fixed_point: FixedPointConfig = field(default_factory=FixedPointConfig)
    newton: NewtonConfig = field(default_factory=NewtonConfig)
    lam: float | None = None
    sweep: tuple[float, float, float] | None = None
    delta: float = 0.25
    selection: str = "unique"
    mu_pair: tuple[float, float] = (0.0, 1.0)
    probe: float = 1.0
    contraction_bound: float = 1.0
    analytic: dict = field(default_factory=dict)

    def lambdas(self) -> list[float]:
        """Sweep values from * factor^k up to ``to`` (inclusive within 1e-9 relative)."""
        if self.sweep is None:
            raise ConfigError("no sweep range configured", path="sweep.from")
        lo, hi, factor = self.sweep
        out, lam = [], lo
        while lam <= hi * (1 + 1e-9):
            out.append(lam)
            lam *= factor
        return out


def _expr_key(r: _Reader, key: str, build):
    try:
        return build()
    except ExpressionSyntaxError as exc:
        raise r.error(key, str(exc)) from None
    except (FieldError, EvaluationError, ValueError) as exc:
        raise r.error(key, str(exc)) from None


def _nonlocal(r: _Reader, dim: int) -> NonlocalFunctional:
    kind = r.str("nonlocal.kind", "expression")
    sides_raw = r.str("nonlocal.sides", "all")
    sides = None if sides_raw.strip() == "all" else [s.strip() for s in sides_raw.split(",")]
    xi = []
    if r.has("nonlocal.xi"):
        xi = _points(r.str("nonlocal.xi"), dim, lambda m: r.error("nonlocal.xi", m))
    beta = r.numbers("nonlocal.beta", ())
    key = "nonlocal.kind"
    try:
        if kind == "multipoint":
            return NonlocalFunctional.multipoint(beta, xi, sides)
        if kind == "integral":
            w = _expr_key(r, "nonlocal.w", lambda: ScalarField.parse(r.str("nonlocal.w", "1")))
            return NonlocalFunctional("integral", weight=w, sides=sides)
        if kind == "affine":
            return _expr_key(r, "nonlocal.w", lambda: NonlocalFunctional.affine(
                beta, xi, r.float("nonlocal.gamma", 0.0), r.str("nonlocal.w", "1"),
                r.str("nonlocal.phi", "s"), sides))
        if kind == "expression":
            key = "nonlocal.expr"
            return _expr_key(r, key, lambda: NonlocalFunctional.expression(
                r.str("nonlocal.expr", "0"), xi, r.str("nonlocal.w", "0"), r.str("nonlocal.phi", "s"), sides))
    except ProblemError as exc:
        raise r.error(key, str(exc)) from None
    raise r.error("nonlocal.kind", f"unknown combiner {kind!r}")


def build_run_config(entries: dict[str, tuple[str, int]]) -> RunConfig:
    r = _Reader(entries)
    try:
        domain = _domain(r.str("problem.domain", required=True), lambda m: r.error("problem.domain", m))
    except DomainError as exc:
        raise r.error("problem.domain", str(exc)) from None
    D = _expr_key(r, "problem.D", lambda: ScalarField.parse(r.str("problem.D", "1"), positive=True))
    g = _expr_key(r, "problem.g", lambda: ScalarField.parse(r.str("problem.g", "0")))
    f_src = r.str("problem.f", required=True)
    h_src = r.str("problem.h", required=True)
    theta0 = r.float("problem.theta0", required=True)
    _expr_key(r, "problem.h", lambda: ScalarField.parse(h_src))
    nl = _expr_key(r, "problem.f", lambda: Nonlinearity.parse(f_src, h_src, theta0, f_s=None))
    if r.has("problem.f_s"):
        nl = _expr_key(r, "problem.f_s", lambda: Nonlinearity.parse(f_src, h_src, theta0, r.str("problem.f_s")))
    bc = _nonlocal(r, domain.dim)

    lam = r.float("problem.lambda")
    sweep = None
    if any(r.has(k) for k in ("sweep.from", "sweep.to", "sweep.factor")):
        lo = r.float("sweep.from", required=True)
        hi = r.float("sweep.to", required=True)
        factor = r.float("sweep.factor", required=True)
        if not 0 < lo < hi:
            raise r.error("sweep.from", "need 0 < sweep.from < sweep.to")
        if not factor > 1:
            raise r.error("sweep.factor", "factor must exceed 1")
        sweep = (lo, hi, factor)
    if lam is None and sweep is None:
        raise ConfigError("set problem.lambda or a sweep range", path="problem.lambda")
    try:
        spec = ProblemSpec(domain, D, nl, g, lam if lam is not None else sweep[0], bc)
    except ProblemError as exc:
        msg = str(exc)
        path = "problem.lambda" if "lambda" in msg else "nonlocal.sides" if "side" in msg else "nonlocal.xi"
        raise ConfigError(str(exc), path=path, line=entries.get(path, (None, None))[1]) from None

    nodes = None
    raw_nodes = r.str("grid.nodes", "auto")
    if raw_nodes.strip() != "auto":
        vals = r.numbers("grid.nodes")
        if len(vals) == 1 and domain.dim == 2:
            vals = vals * 2
        if len(vals) != domain.dim or any(v != int(v) or v < 3 for v in vals):
            raise r.error("grid.nodes", f"need {domain.dim} integer node count(s) >= 3")
        nodes = tuple(int(v) for v in vals)

    def sub(prefix, names, cls):
        kwargs = {}
        for name in names:
            key = f"{prefix}.{name}"
            if not r.has(key):
                continue
            raw = r.str(key)
            if name == "strategy":
                kwargs[name] = raw
            elif name in ("max_iters", "scan_points", "cg_maxiter"):
                kwargs[name] = r.int(key)
            else:
                kwargs[name] = r.float(key)
        try:
            return cls(**kwargs)
        except ValueError as exc:
            # blame the first supplied field the message names, else the section
            named = [n for n in kwargs if n in str(exc)]
            if named:
                raise r.error(f"{prefix}.{named[0]}", str(exc)) from None
            raise ConfigError(str(exc), path=prefix) from None

    mu_pair = r.numbers("verify.mu_pair", (0.0, 1.0))
    if len(mu_pair) != 2:
        raise r.error("verify.mu_pair", "expected (mu_tilde, mu)")
    return RunConfig(
        spec=spec,
        nodes=nodes,
        nodes_per_layer=r.int("grid.nodes_per_layer", 10),
        fixed_point=sub("fixed_point", sorted(_FP_KEYS), FixedPointConfig),
        newton=sub("newton", sorted(_NEWTON_KEYS), NewtonConfig),
        lam=lam,
        sweep=sweep,
        delta=r.float("verify.delta", 0.25),
        selection=r.str("verify.selection", "unique"),
        mu_pair=(mu_pair[0], mu_pair[1]),
        probe=r.float("verify.probe", 1.0),
        contraction_bound=r.float("verify.contraction_bound", 1.0),
        analytic={"kind": r.str("analytic.kind", "sqrt"), "s_max": r.float("analytic.s_max", 50.0),
                  "points": r.int("analytic.points", 101)},
    )


def load_config(path: str) -> RunConfig:
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read {path}: {exc.strerror}") from None
    return build_run_config(parse_config(text))
