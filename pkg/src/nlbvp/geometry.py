"""Box domains, uniform tensor-product grids and distance-to-boundary helpers."""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

__all__ = [
    "DomainError",
    "Domain",
    "Grid",
    "InteriorRegion",
    "dist_to_boundary",
    "m_xi",
    "interior_region",
    "SIDES",
]

# boundary components, in axis order: (low, high) of x, then of y
SIDES = ("left", "right", "bottom", "top")


class DomainError(ValueError):
    """A point or parameter is incompatible with the domain."""


@dataclass(frozen=True)
class Domain:
    bounds: tuple[tuple[float, float], ...]

    def __post_init__(self):
        bounds = tuple((float(lo), float(hi)) for lo, hi in self.bounds)
        if len(bounds) not in (1, 2):
            raise DomainError(f"dimension must be 1 or 2, got {len(bounds)}")
        for lo, hi in bounds:
            if not lo < hi:
                raise DomainError(f"empty axis ({lo}, {hi})")
        object.__setattr__(self, "bounds", bounds)

    @classmethod
    def interval(cls, low: float, high: float) -> "Domain":
        return cls(((low, high),))

    @classmethod
    def rectangle(cls, x: tuple[float, float], y: tuple[float, float]) -> "Domain":
        return cls((tuple(x), tuple(y)))

    @property
    def kind(self) -> str:
        return "interval" if self.dim == 1 else "rectangle"

    @property
    def dim(self) -> int:
        return len(self.bounds)

    @property
    def lengths(self) -> np.ndarray:
        return np.array([hi - lo for lo, hi in self.bounds])

    @property
    def diameter(self) -> float:
        return float(np.linalg.norm(self.lengths))

    @property
    def inradius(self) -> float:
        return float(self.lengths.min() / 2)

    def sides(self) -> tuple[str, ...]:
        return SIDES[: 2 * self.dim]

    def contains(self, x, strict: bool = False) -> bool:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        if x.shape != (self.dim,):
            return False
        for xi, (lo, hi) in zip(x, self.bounds):
            if strict and not lo < xi < hi:
                return False
            if not strict and not lo <= xi <= hi:
                return False
        return True


def _slack(domain: Domain, points: np.ndarray) -> np.ndarray:
    # points: (npts, dim); per-point min distance to any face
    lo = np.array([b[0] for b in domain.bounds])
    hi = np.array([b[1] for b in domain.bounds])
    return np.minimum(points - lo, hi - points).min(axis=1)


def dist_to_boundary(domain: Domain, x) -> float:
    """Euclidean distance from a point of the closed box to its boundary."""
    if not domain.contains(x):
        raise DomainError(f"point {x!r} lies outside the closed domain {domain.bounds}")
    pt = np.atleast_1d(np.asarray(x, dtype=float))[None, :]
    return float(_slack(domain, pt)[0])


def m_xi(domain: Domain, points) -> float:
    """Smallest boundary distance over a nonempty set of interior points."""
    pts = [np.atleast_1d(np.asarray(p, dtype=float)) for p in points]
    if not pts:
        raise DomainError("m_xi needs at least one point")
    for p in pts:
        if not domain.contains(p, strict=True):
            raise DomainError(f"point {tuple(p)} is not strictly inside the domain")
    return min(dist_to_boundary(domain, p) for p in pts)


@dataclass(frozen=True)
class Grid:
    """Uniform tensor-product grid. Node arrays are flattened in C order (x index slowest)."""

    domain: Domain
    nodes_per_axis: tuple[int, ...]

    def __post_init__(self):
        n = tuple(int(k) for k in np.atleast_1d(self.nodes_per_axis))
        if len(n) == 1 and self.domain.dim == 2:
            n = n * 2
        if len(n) != self.domain.dim:
            raise DomainError(f"{len(n)} node counts for a {self.domain.dim}D domain")
        if any(k < 3 for k in n):
            raise DomainError(f"need at least 3 nodes per axis, got {n}")
        object.__setattr__(self, "nodes_per_axis", n)

    @property
    def dim(self) -> int:
        return self.domain.dim

    @property
    def shape(self) -> tuple[int, ...]:
        return self.nodes_per_axis

    @property
    def size(self) -> int:
        return int(np.prod(self.nodes_per_axis))

    @cached_property
    def spacing(self) -> np.ndarray:
        return np.array(
            [(hi - lo) / (n - 1) for (lo, hi), n in zip(self.domain.bounds, self.nodes_per_axis)]
        )

    @cached_property
    def axes(self) -> tuple[np.ndarray, ...]:
        return tuple(
            np.linspace(lo, hi, n) for (lo, hi), n in zip(self.domain.bounds, self.nodes_per_axis)
        )

    @cached_property
    def points(self) -> np.ndarray:
        """Node coordinates, shape (size, dim)."""
        mesh = np.meshgrid(*self.axes, indexing="ij")
        return np.stack([m.ravel() for m in mesh], axis=1)

    def coords(self) -> dict[str, np.ndarray]:
        names = ("x", "y")
        return {names[k]: self.points[:, k] for k in range(self.dim)}

    @cached_property
    def boundary_mask(self) -> np.ndarray:
        mask = np.zeros(self.shape, dtype=bool)
        for axis in range(self.dim):
            idx = [slice(None)] * self.dim
            idx[axis] = 0
            mask[tuple(idx)] = True
            idx[axis] = -1
            mask[tuple(idx)] = True
        return mask.ravel()

    def side_mask(self, side: str) -> np.ndarray:
        """Nodes on one boundary component; corners belong to both adjacent sides."""
        k = SIDES.index(side)
        axis, end = divmod(k, 2)
        if axis >= self.dim:
            raise DomainError(f"side {side!r} does not exist in {self.dim}D")
        mask = np.zeros(self.shape, dtype=bool)
        idx = [slice(None)] * self.dim
        idx[axis] = -1 if end else 0
        mask[tuple(idx)] = True
        return mask.ravel()

    @cached_property
    def distance(self) -> np.ndarray:
        """dist(x, boundary) at every node."""
        d = _slack(self.domain, self.points)
        d[self.boundary_mask] = 0.0
        return np.maximum(d, 0.0)

    def quadrature_weights(self) -> np.ndarray:
        """Tensor-product trapezoidal weights per node."""
        w = np.ones(1)
        for n, h in zip(self.nodes_per_axis, self.spacing):
            w1 = np.full(n, h)
            w1[[0, -1]] = h / 2
            w = np.multiply.outer(w, w1)
        return w.ravel()


@dataclass(frozen=True)
class InteriorRegion:
    delta: float
    node_set: np.ndarray  # flat node indices

    def __len__(self):
        return len(self.node_set)

    @property
    def empty(self) -> bool:
        return len(self.node_set) == 0


def interior_region(grid: Grid, delta: float) -> InteriorRegion:
    """Nodes farther than ``delta`` from the boundary."""
    if not 0 < delta < grid.domain.diameter:
        raise DomainError(f"delta must lie in (0, diam={grid.domain.diameter}), got {delta}")
    return InteriorRegion(float(delta), np.flatnonzero(grid.distance > delta))
