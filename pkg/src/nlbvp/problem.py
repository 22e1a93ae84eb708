"""Problem data: the nonlocal boundary functional and the full problem description."""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .expr import (
    EvaluationError,
    Expression,
    Num,
    Var,
    evaluate,
    free_variables,
    is_globally_lipschitz,
    parse_expression,
    to_source,
)
from .fields import FieldError, Nonlinearity, ScalarField, validate_nonlinearity
from .geometry import Domain, DomainError, Grid, SIDES

__all__ = ["ProblemError", "NonlocalFunctional", "ProblemSpec", "COMBINERS"]

COMBINERS = ("multipoint", "integral", "affine", "expression")
IDENTITY = Var("s")
ZERO_FIELD = ScalarField(Num(0.0))


class ProblemError(ValueError):
    pass


def _point(p) -> tuple[float, ...]:
    return tuple(float(c) for c in np.atleast_1d(p))


@dataclass(frozen=True)
class NonlocalFunctional:
    """Boundary operator B(u(xi_1), ..., u(xi_m), int w Phi(u)) and where it applies.

    ``sides`` lists the boundary components on which u = g + B (the mask sigma);
    on the remaining components u = g. ``None`` means every side.
    """

    kind: str
    points: tuple[tuple[float, ...], ...] = ()
    beta: tuple[float, ...] = ()
    gamma: float = 0.0
    expr: Expression | None = None
    weight: ScalarField = ZERO_FIELD
    transform: Expression = IDENTITY
    sides: tuple[str, ...] | None = None

    def __post_init__(self):
        object.__setattr__(self, "points", tuple(_point(p) for p in self.points))
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        if self.sides is not None:
            object.__setattr__(self, "sides", tuple(self.sides))
            bad = set(self.sides) - set(SIDES)
            if bad:
                raise ProblemError(f"unknown boundary sides {sorted(bad)}")
        if self.kind not in COMBINERS:
            raise ProblemError(f"unknown combiner {self.kind!r}; expected one of {COMBINERS}")
        if len(set(self.points)) != len(self.points):
            raise ProblemError("nonlocal points must be pairwise distinct")
        m = len(self.points)
        if self.kind in ("multipoint", "affine") and len(self.beta) != m:
            raise ProblemError(f"{len(self.beta)} coefficients for {m} points")
        if self.kind == "multipoint" and self.weight != ZERO_FIELD:
            raise ProblemError("a multipoint combiner carries no weight function")
        if self.kind == "integral":
            if self.beta:
                raise ProblemError("an integral combiner takes no point coefficients")
            if self.transform != IDENTITY:
                raise ProblemError("an integral combiner uses the identity transform")
        if self.kind == "expression":
            if self.expr is None:
                raise ProblemError("expression combiner needs an expression")
            allowed = {f"s{j + 1}" for j in range(m)} | {"I"}
            extra = free_variables(self.expr) - allowed
            if extra:
                raise ProblemError(f"combiner uses unknown variables {sorted(extra)}")
        if free_variables(self.transform) - {"s"}:
            raise ProblemError("transform must be a function of s only")

    # constructors -------------------------------------------------------

    @classmethod
    def multipoint(cls, beta, points, sides=None):
        return cls("multipoint", points=points, beta=beta, sides=sides)

    @classmethod
    def integral(cls, weight: str = "1", sides=None):
        return cls("integral", weight=ScalarField.parse(weight), sides=sides)

    @classmethod
    def affine(cls, beta, points, gamma, weight: str = "1", transform: str = "s", sides=None):
        return cls(
            "affine",
            points=points,
            beta=beta,
            gamma=gamma,
            weight=ScalarField.parse(weight),
            transform=parse_expression(transform, variables={"s"}),
            sides=sides,
        )

    @classmethod
    def expression(cls, source: str, points=(), weight: str = "0", transform: str = "s", sides=None):
        m = len(points)
        names = {f"s{j + 1}" for j in range(m)} | {"I"}
        return cls(
            "expression",
            points=points,
            expr=parse_expression(source, variables=names),
            weight=ScalarField.parse(weight),
            transform=parse_expression(transform, variables={"s"}),
            sides=sides,
        )

    # behaviour ---------------------------------------------------------

    @property
    def m(self) -> int:
        return len(self.points)

    @property
    def uses_integral(self) -> bool:
        if self.kind == "integral":
            return True
        if self.kind == "affine":
            return self.gamma != 0.0
        if self.kind == "expression":
            return "I" in free_variables(self.expr)
        return False

    @property
    def lipschitz_class(self) -> str:
        if self.kind == "multipoint":
            return "global"
        if self.kind == "integral":
            return "global"
        ok = is_globally_lipschitz(self.transform) or not self.uses_integral
        if self.kind == "expression":
            ok = ok and is_globally_lipschitz(self.expr)
        return "global" if ok else "local"

    def combine(self, point_values, integral: float = 0.0) -> float:
        s = np.asarray(point_values, dtype=float).reshape(-1)
        if len(s) != self.m:
            raise ProblemError(f"expected {self.m} point values, got {len(s)}")
        if self.kind == "multipoint":
            return float(np.dot(self.beta, s))
        if self.kind == "integral":
            return float(integral)
        if self.kind == "affine":
            return float(np.dot(self.beta, s) + self.gamma * integral)
        env = {f"s{j + 1}": s[j] for j in range(self.m)}
        env["I"] = float(integral)
        return float(evaluate(self.expr, env))

    def sigma(self, grid: Grid) -> np.ndarray:
        """Indicator of boundary nodes where the nonlocal value is added."""
        sides = grid.domain.sides() if self.sides is None else self.sides
        mask = np.zeros(grid.size)
        for side in sides:
            mask[grid.side_mask(side)] = 1.0
        return mask

    def describe(self) -> dict:
        out = {"kind": self.kind, "points": [list(p) for p in self.points]}
        if self.beta:
            out["beta"] = list(self.beta)
        if self.kind == "affine":
            out["gamma"] = self.gamma
        if self.expr is not None:
            out["expr"] = to_source(self.expr)
        if self.uses_integral:
            out["weight"] = self.weight.source
            out["transform"] = to_source(self.transform)
        out["sides"] = "all" if self.sides is None else list(self.sides)
        return out


@dataclass(frozen=True)
class ProblemSpec:
    """-div(D grad u) + lam f(x, u) = 0 in the box, u = g + sigma B[u] on its boundary."""

    domain: Domain
    diffusion: ScalarField
    nonlinearity: Nonlinearity
    boundary_data: ScalarField
    lam: float
    nonlocal_bc: NonlocalFunctional = field(default_factory=lambda: NonlocalFunctional.expression("0"))

    def __post_init__(self):
        if not self.lam > 0:
            raise ProblemError(f"lambda must be positive, got {self.lam}")
        object.__setattr__(self, "lam", float(self.lam))
        object.__setattr__(self, "diffusion", replace(self.diffusion, declared_positive=True))
        for p in self.nonlocal_bc.points:
            if len(p) != self.domain.dim or not self.domain.contains(p, strict=True):
                raise ProblemError(f"nonlocal point {p} is not strictly inside the domain")
        for side in self.nonlocal_bc.sides or ():
            if side not in self.domain.sides():
                raise ProblemError(f"side {side!r} does not exist for a {self.domain.kind}")

    def with_lambda(self, lam: float) -> "ProblemSpec":
        return replace(self, lam=lam)

    def validate(self, grid: Grid, s_range=None):
        """Check positivity of D and the structure of f on ``grid``; returns the f report."""
        if grid.domain != self.domain:
            raise DomainError("grid is built on a different domain")
        try:
            self.diffusion.on(grid)
            if s_range is None:
                s_range = self.default_s_range(grid)
            report = validate_nonlinearity(self.nonlinearity, grid, s_range)
        except (FieldError, EvaluationError) as exc:
            raise ProblemError(str(exc)) from exc
        if not report.passed:
            raise ProblemError("nonlinearity fails validation: " + "; ".join(report.notes))
        return report

    def b_of_h(self, grid: Grid) -> float:
        """B evaluated on the root profile: exact values at the points, trapezoidal integral."""
        nl = self.nonlocal_bc
        h = self.nonlinearity.root
        values = h.at(np.array(nl.points)) if nl.m else np.zeros(0)
        integral = 0.0
        if nl.uses_integral:
            hv = h.on(grid)
            integrand = self.nonlocal_bc.weight.on(grid) * evaluate(nl.transform, {"s": hv})
            integral = float(grid.quadrature_weights() @ integrand)
        return nl.combine(values, integral)

    def default_bracket(self, grid: Grid) -> float:
        return 10.0 * (1.0 + abs(self.b_of_h(grid)))

    def default_s_range(self, grid: Grid, bracket: float | None = None) -> tuple[float, float]:
        """A priori range of solution values for |mu| <= bracket (comparison bounds, padded by 1)."""
        h = self.nonlinearity.root.on(grid)
        g = np.abs(self.boundary_data.on(grid)[grid.boundary_mask])
        if bracket is None:
            bracket = self.default_bracket(grid)
        pad = abs(bracket) + float(g.max()) + 1.0
        return float(h.min()) - pad, float(h.max()) + pad
