"""Closed-form solutions of the 1D model problem -u'' + lam u = 0.

Multipoint case on (L, R): u(L) = 0, u(R) = g_R + sum_j beta_j u(xi_j). The
characteristic function

    eta(s) = 2 sinh(s (R - L)) - sum_j beta_j 2 sinh(s (xi_j - L))

decides solvability: for eta(sqrt(lam)) != 0 there is exactly one solution,
otherwise none (g_R != 0) or infinitely many (g_R = 0).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable

import numpy as np

__all__ = [
    "NoUniqueSolution",
    "MultipointSpec1D",
    "eta",
    "in_S_eta",
    "lambda_star",
    "find_eta_root",
    "closed_form_multipoint",
    "multipoint_fixed_point",
    "example22_solutions",
]

# e^{s(R-L)} overflows doubles near 709
OVERFLOW_ARG = 700.0


class NoUniqueSolution(ArithmeticError):
    pass


@dataclass(frozen=True)
class MultipointSpec1D:
    L: float
    R: float
    g_R: float
    beta: tuple[float, ...]
    xi: tuple[float, ...]

    def __post_init__(self):
        object.__setattr__(self, "beta", tuple(float(b) for b in self.beta))
        object.__setattr__(self, "xi", tuple(float(x) for x in self.xi))
        if not self.L < self.R:
            raise ValueError("need L < R")
        if len(self.beta) != len(self.xi):
            raise ValueError("beta and xi must have equal length")
        if any(b == 0 for b in self.beta):
            raise ValueError("beta_j must be nonzero")
        if any(not self.L < x < self.R for x in self.xi):
            raise ValueError("every xi_j must lie strictly inside (L, R)")
        if any(a >= b for a, b in zip(self.xi, self.xi[1:])):
            raise ValueError("xi must be strictly increasing")

    @property
    def m(self) -> int:
        return len(self.beta)

    def positive_moment(self) -> float:
        """sum max(beta_j, 0)(xi_j - L); at most R - L means eta > 0 for all s > 0."""
        return sum(max(b, 0.0) * (x - self.L) for b, x in zip(self.beta, self.xi))

    def moment(self) -> float:
        return sum(b * (x - self.L) for b, x in zip(self.beta, self.xi))


def _guard(s: float, spec: MultipointSpec1D):
    if s * (spec.R - spec.L) > OVERFLOW_ARG:
        raise OverflowError(f"s (R - L) = {s * (spec.R - spec.L):.1f} exceeds {OVERFLOW_ARG}")


def eta(s: float, spec: MultipointSpec1D) -> float:
    if s < 0:
        raise ValueError("eta is defined for s >= 0")
    _guard(s, spec)
    L = spec.L
    total = 2 * math.sinh(s * (spec.R - L))
    for b, x in zip(spec.beta, spec.xi):
        total -= b * 2 * math.sinh(s * (x - L))
    return total


def in_S_eta(lam: float, spec: MultipointSpec1D, tol: float = 1e-9) -> str:
    """'member' when |eta(sqrt lam)| clears tol * e^{sqrt(lam)(R-L)}, else 'boundary'."""
    if not lam > 0:
        raise ValueError("lambda must be positive")
    s = math.sqrt(lam)
    scale = math.exp(s * (spec.R - spec.L))
    return "member" if abs(eta(s, spec)) > tol * scale else "boundary"


def lambda_star(spec: MultipointSpec1D) -> float:
    """Threshold above which eta(sqrt lam) > 0, using the largest node xi_m."""
    if spec.m < 1:
        raise ValueError("lambda_star needs at least one multipoint node")
    B = sum(abs(b) for b in spec.beta)
    return (math.log(max(B, 1 / B)) / (spec.R - spec.xi[-1])) ** 2


def find_eta_root(spec: MultipointSpec1D, s_max: float, n_scan: int = 4096) -> float | None:
    """Smallest positive root of eta on (0, s_max], refined by bisection; None if none found."""
    if not s_max > 0:
        raise ValueError("s_max must be positive")
    if spec.m == 0:
        return None
    s_max = min(s_max, OVERFLOW_ARG / (spec.R - spec.L))
    grid = np.linspace(0.0, s_max, n_scan + 1)[1:]
    vals = [eta(s, spec) for s in grid]
    for k in range(len(grid) - 1):
        if vals[k] == 0.0:
            return float(grid[k])
        if (vals[k] > 0) != (vals[k + 1] > 0):
            lo, hi, flo = grid[k], grid[k + 1], vals[k]
            while hi - lo > 1e-12 * hi:
                mid = 0.5 * (lo + hi)
                fm = eta(mid, spec)
                if fm == 0.0:
                    return float(mid)
                if (fm > 0) == (flo > 0):
                    lo, flo = mid, fm
                else:
                    hi = mid
            return float(0.5 * (lo + hi))
    return None


def closed_form_multipoint(spec: MultipointSpec1D, lam: float, x) -> np.ndarray | float:
    """u(x) = g_R 2 sinh(sqrt(lam)(x - L)) / eta(sqrt lam) for lam in S_eta."""
    if in_S_eta(lam, spec) != "member":
        g = spec.g_R
        what = "has no solution" if g != 0 else "has infinitely many solutions"
        raise NoUniqueSolution(f"eta(sqrt({lam})) vanishes to tolerance; the problem {what}")
    s = math.sqrt(lam)
    out = spec.g_R * 2 * np.sinh(s * (np.asarray(x, dtype=float) - spec.L)) / eta(s, spec)
    return float(out) if np.ndim(out) == 0 else out


def multipoint_fixed_point(spec: MultipointSpec1D, lam: float) -> tuple[float, float]:
    """(slope k, fixed point mu*) of the affine map mu -> k (g_R + mu) for this problem."""
    s = math.sqrt(lam)
    L, R = spec.L, spec.R
    k = sum(b * math.sinh(s * (x - L)) for b, x in zip(spec.beta, spec.xi)) / math.sinh(s * (R - L))
    return k, k * spec.g_R / (1 - k)


def example22_solutions(kind: str, lam: float) -> list[tuple[Callable, float]]:
    """Both solutions of -u'' + lam u = 0, u(0) = 0 with u(1) = sqrt(int |u|) or int u^2.

    Returns [(u, u(1)), ...], the trivial branch first.
    """
    if not lam > 0:
        raise ValueError("lambda must be positive")
    a = math.sqrt(lam)
    zero = (lambda x: np.zeros_like(np.asarray(x, dtype=float)), 0.0)
    if kind == "sqrt":
        c = 1.0 / (2 * a * math.cosh(a / 2) ** 2)
        u = lambda x: c * np.sinh(a * np.asarray(x, dtype=float))  # noqa: E731
        return [zero, (u, math.tanh(a / 2) / a)]
    if kind == "quadratic":
        if 2 * a > OVERFLOW_ARG:
            raise OverflowError(f"sqrt(lambda) = {a:.1f} is too large for the closed form")
        A = 2 * math.sinh(a) / (math.sinh(2 * a) / (2 * a) - 1)
        u = lambda x: A * np.sinh(a * np.asarray(x, dtype=float))  # noqa: E731
        return [zero, (u, A * math.sinh(a))]
    raise ValueError(f"kind must be 'sqrt' or 'quadratic', got {kind!r}")
