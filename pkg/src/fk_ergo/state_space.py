"""
Uniform one-dimensional grids and the objects living on them.

A :class:`GridSpace` is either a segment ``[lower, upper]`` (nodes include both
endpoints) or a torus of period ``upper - lower`` (the right endpoint is
identified with the left one and is not a node).  Functions are node samples;
measures store node *masses*, i.e. density times the cell width, so that
integration is a dot product.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Callable, Sequence

import numpy as np

TOPOLOGIES = ("segment", "torus")


def _frozen(a) -> np.ndarray:
    a = np.array(a, dtype=float)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class GridSpace:
    topology: str
    lower: float
    upper: float
    n_nodes: int
    nodes: np.ndarray = field(init=False, repr=False, compare=False)
    cell_weight: float = field(init=False, compare=False)

    def __post_init__(self):
        if self.topology not in TOPOLOGIES:
            raise ValueError(f"topology must be one of {TOPOLOGIES}, got {self.topology!r}")
        if int(self.n_nodes) != self.n_nodes or self.n_nodes < 2:
            raise ValueError(f"n_nodes must be an integer >= 2, got {self.n_nodes}")
        if not self.upper > self.lower:
            raise ValueError("upper must exceed lower")
        object.__setattr__(self, "n_nodes", int(self.n_nodes))
        object.__setattr__(self, "lower", float(self.lower))
        object.__setattr__(self, "upper", float(self.upper))
        if self.topology == "segment":
            nodes = np.linspace(self.lower, self.upper, self.n_nodes)
            dx = (self.upper - self.lower) / (self.n_nodes - 1)
        else:
            dx = (self.upper - self.lower) / self.n_nodes
            nodes = self.lower + dx * np.arange(self.n_nodes)
        object.__setattr__(self, "nodes", _frozen(nodes))
        object.__setattr__(self, "cell_weight", float(dx))

    @classmethod
    def segment(cls, lower, upper, n_nodes):
        return cls("segment", lower, upper, n_nodes)

    @classmethod
    def torus(cls, lower, upper, n_nodes):
        return cls("torus", lower, upper, n_nodes)

    @property
    def dx(self) -> float:
        return self.cell_weight

    @property
    def period(self) -> float:
        return self.upper - self.lower

    @property
    def periodic(self) -> bool:
        return self.topology == "torus"

    def displacement(self, x, y):
        """Signed ``y - x``; on the torus the representative in ``[-L/2, L/2)``."""
        d = np.subtract(y, x)
        if self.periodic:
            L = self.period
            d = d - L * np.floor(d / L + 0.5)
        return d

    def distance(self, x, y):
        return np.abs(self.displacement(x, y))

    def wrap(self, x):
        """Map points into the fundamental domain (identity on segments)."""
        if not self.periodic:
            return np.asarray(x, dtype=float)
        return self.lower + np.mod(np.asarray(x, dtype=float) - self.lower, self.period)

    def nearest_node(self, x0: float) -> int:
        return int(np.argmin(self.distance(self.nodes, x0)))

    def check_same(self, other: "GridSpace"):
        if self != other:
            raise ValueError(f"space mismatch: {self} vs {other}")


@dataclass(frozen=True)
class GridFunction:
    space: GridSpace
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.shape != (self.space.n_nodes,):
            raise ValueError(
                f"GridFunction needs {self.space.n_nodes} values, got shape {v.shape}"
            )
        object.__setattr__(self, "values", v)

    @classmethod
    def from_callable(cls, space: GridSpace, fn: Callable) -> "GridFunction":
        return cls(space, np.broadcast_to(fn(space.nodes), space.nodes.shape))

    @classmethod
    def constant(cls, space: GridSpace, c: float = 1.0) -> "GridFunction":
        return cls(space, np.full(space.n_nodes, float(c)))

    def __len__(self):
        return self.space.n_nodes


@dataclass(frozen=True)
class GridMeasure:
    space: GridSpace
    masses: np.ndarray

    def __post_init__(self):
        m = _frozen(self.masses)
        if m.shape != (self.space.n_nodes,):
            raise ValueError(
                f"GridMeasure needs {self.space.n_nodes} masses, got shape {m.shape}"
            )
        if not np.all(np.isfinite(m)):
            raise ValueError("measure masses must be finite")
        if np.any(m < 0):
            raise ValueError("measure masses must be nonnegative")
        object.__setattr__(self, "masses", m)

    @property
    def total_mass(self) -> float:
        return float(self.masses.sum())

    def is_probability(self, tol: float = 1e-10) -> bool:
        return abs(self.total_mass - 1.0) <= tol

    def normalized(self) -> "GridMeasure":
        z = self.total_mass
        if z <= 0:
            raise ValueError("cannot normalize a zero measure")
        return GridMeasure(self.space, self.masses / z)

    @classmethod
    def delta(cls, space: GridSpace, x0: float) -> "GridMeasure":
        m = np.zeros(space.n_nodes)
        m[space.nearest_node(x0)] = 1.0
        return cls(space, m)

    @classmethod
    def uniform(cls, space: GridSpace, nodes: Sequence[int] | None = None) -> "GridMeasure":
        m = np.zeros(space.n_nodes)
        if nodes is None:
            m[:] = 1.0
        else:
            m[np.asarray(nodes, dtype=int)] = 1.0
        return cls(space, m / m.sum())

    @classmethod
    def from_density(cls, space: GridSpace, density: Callable) -> "GridMeasure":
        """Node masses ``density(x) * dx``, normalized to a probability."""
        m = np.broadcast_to(density(space.nodes), space.nodes.shape) * space.dx
        return cls(space, m).normalized()


@dataclass(frozen=True)
class CompactFamily:
    """Increasing node-index sets, the grid version of ``K_1 ⊂ K_2 ⊂ ...``."""

    space: GridSpace
    sets: tuple
    radii: tuple = ()

    def __post_init__(self):
        sets = tuple(np.unique(np.asarray(s, dtype=int)) for s in self.sets)
        if not sets:
            raise ValueError("a compact family needs at least one set")
        for s in sets:
            if len(s) == 0 or s[0] < 0 or s[-1] >= self.space.n_nodes:
                raise ValueError("compact sets must be nonempty lists of valid node indices")
        for a, b in zip(sets, sets[1:]):
            if not np.all(np.isin(a, b)):
                raise ValueError("compact sets must be increasing")
        for s in sets:
            s.setflags(write=False)
        object.__setattr__(self, "sets", sets)

    def __len__(self):
        return len(self.sets)

    def mask(self, n: int) -> np.ndarray:
        m = np.zeros(self.space.n_nodes, dtype=bool)
        m[self.sets[n]] = True
        return m

    def covers_space(self) -> bool:
        return len(self.sets[-1]) == self.space.n_nodes

    @classmethod
    def balls(cls, space: GridSpace, radii: Sequence[float], center: float = 0.0,
              cover: bool = False) -> "CompactFamily":
        """Centered balls ``{|x - center| <= r}``; ``cover`` appends the whole grid."""
        d = space.distance(space.nodes, center)
        tol = 1e-9 * space.dx
        sets = [np.flatnonzero(d <= r + tol) for r in radii]
        radii = tuple(float(r) for r in radii)
        if cover and len(sets[-1]) < space.n_nodes:
            sets.append(np.arange(space.n_nodes))
            radii = radii + (float("inf"),)
        return cls(space, tuple(sets), radii)

    @classmethod
    def symmetric(cls, space: GridSpace, r0: float, n_sets: int, cover: bool = False):
        return cls.balls(space, [r0 * (i + 1) for i in range(n_sets)], cover=cover)


def _check_space(a, b):
    a.space.check_same(b.space)


def weighted_sup_norm(phi: GridFunction, W: GridFunction) -> float:
    """``max |phi| / W`` over the nodes."""
    _check_space(phi, W)
    if np.any(W.values <= 0):
        raise ValueError("W must be strictly positive at every node")
    return float(np.max(np.abs(phi.values) / W.values))


def rho_W(mu: GridMeasure, nu: GridMeasure, W: GridFunction) -> float:
    """Weighted total variation ``sum_x W(x) |mu(x) - nu(x)|``.

    On a grid the supremum over ``|phi| <= W`` is attained by
    ``phi = W * sign(mu - nu)``.
    """
    _check_space(mu, nu)
    _check_space(mu, W)
    return float(np.sum(W.values * np.abs(mu.masses - nu.masses)))


def total_variation(mu: GridMeasure, nu: GridMeasure) -> float:
    """``sup_A |mu(A) - nu(A)|`` (half the L1 distance)."""
    _check_space(mu, nu)
    return 0.5 * float(np.sum(np.abs(mu.masses - nu.masses)))


def integrate(mu: GridMeasure, phi: GridFunction) -> float:
    _check_space(mu, phi)
    return float(mu.masses @ phi.values)
