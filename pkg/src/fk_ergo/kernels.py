"""
Discretized weighted kernels ``Q^f`` and their action on functions and measures.

Entry ``(i, j)`` of a kernel matrix is the mass ``Q^f(x_i, dy)`` assigns to node
``j``: the transition density evaluated at ``x_j`` times ``dx``.  On a segment
the Gaussian rows are *not* renormalized; the row-sum deficit is mass leaving
the truncated domain and is kept as a diagnostic.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .state_space import GridFunction, GridMeasure, GridSpace

MARKOV_TOL = 1e-10
WRAP_TOL = 1e-14


@dataclass(frozen=True)
class DiscretizedKernel:
    space: GridSpace
    matrix: np.ndarray
    markov: bool = False
    label: str = field(default="", compare=False)

    def __post_init__(self):
        m = np.array(self.matrix, dtype=float)
        n = self.space.n_nodes
        if m.shape != (n, n):
            raise ValueError(f"kernel matrix must be {n}x{n}, got {m.shape}")
        if not np.all(np.isfinite(m)):
            raise ValueError("kernel entries must be finite")
        if np.any(m < 0):
            raise ValueError("kernel entries must be nonnegative")
        empty = np.flatnonzero(~np.any(m > 0, axis=1))
        if empty.size:
            raise ValueError(f"kernel rows {empty[:5].tolist()} have no positive entry")
        if self.markov:
            dev = np.max(np.abs(m.sum(axis=1) - 1.0))
            if dev > MARKOV_TOL:
                raise ValueError(f"Markov kernel row sums deviate from 1 by {dev:.3e}")
        m.setflags(write=False)
        object.__setattr__(self, "matrix", m)

    @property
    def row_sums(self) -> np.ndarray:
        return self.matrix.sum(axis=1)

    @property
    def mass_deficit(self) -> np.ndarray:
        """``1 - Q1`` per row; meaningful for untilted kernels only."""
        return 1.0 - self.row_sums

    @property
    def n(self) -> int:
        return self.space.n_nodes


def _gaussian_rows(space: GridSpace, means: np.ndarray, std: float) -> np.ndarray:
    """Node-sampled normal densities (one row per mean) times ``dx``."""
    norm = space.dx / (np.sqrt(2.0 * np.pi) * std)
    if not space.periodic:
        z = (space.nodes[None, :] - means[:, None]) / std
        return norm * np.exp(-0.5 * z * z)
    L = space.period
    d = space.displacement(means[:, None], space.nodes[None, :])
    total = np.exp(-0.5 * (d / std) ** 2)
    m = 1
    while True:
        added = np.exp(-0.5 * ((d + m * L) / std) ** 2) + np.exp(-0.5 * ((d - m * L) / std) ** 2)
        total = total + added
        if np.all(added <= WRAP_TOL * total):
            break
        m += 1
    return norm * total


def gaussian_rw_kernel(space: GridSpace, sigma: float) -> DiscretizedKernel:
    """Gaussian random walk ``x' = x + sigma G``."""
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mat = _gaussian_rows(space, space.nodes, sigma)
    return DiscretizedKernel(space, mat, label=f"gaussian_rw(sigma={sigma})")


def ou_kernel(space: GridSpace, rho: float, sigma: float) -> DiscretizedKernel:
    """Discrete Ornstein-Uhlenbeck (AR(1)) step ``x' = rho x + sigma G``."""
    if not -1.0 < rho < 1.0:
        raise ValueError(f"|rho| < 1 required, got rho={rho}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    mat = _gaussian_rows(space, rho * space.nodes, sigma)
    return DiscretizedKernel(space, mat, label=f"ou(rho={rho}, sigma={sigma})")


def euler_maruyama_kernel(space: GridSpace, drift: GridFunction, sigma: float,
                          dt: float) -> DiscretizedKernel:
    """One Euler-Maruyama step ``x + dt b(x) + sigma sqrt(dt) G`` wrapped on the torus."""
    if not space.periodic:
        raise ValueError("euler_maruyama_kernel is defined on the torus only")
    space.check_same(drift.space)
    if not dt > 0:
        raise ValueError(f"dt must be positive, got {dt}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    std = sigma * np.sqrt(dt)
    mat = _gaussian_rows(space, space.nodes + dt * drift.values, std)
    dev = np.max(np.abs(mat.sum(axis=1) - 1.0))
    if dev > MARKOV_TOL:
        raise ValueError(
            f"wrapped Gaussian under-resolved (row-sum error {dev:.2e}); "
            f"std {std:.3g} vs dx {space.dx:.3g}: refine the grid or increase dt"
        )
    return DiscretizedKernel(space, mat, markov=True, label=f"euler_maruyama(dt={dt})")


def tilt_kernel(Q: DiscretizedKernel, f: GridFunction, scale: float = 1.0) -> DiscretizedKernel:
    """Row scaling ``e^{scale f(x_i)} Q(x_i, .)``."""
    Q.space.check_same(f.space)
    if not scale > 0:
        raise ValueError(f"scale must be positive, got {scale}")
    mat = np.exp(scale * f.values)[:, None] * Q.matrix
    zero = not np.any(f.values)
    return DiscretizedKernel(Q.space, mat, markov=Q.markov and zero,
                             label=f"tilt[{Q.label}]")


def apply_to_function(K: DiscretizedKernel, phi: GridFunction) -> GridFunction:
    K.space.check_same(phi.space)
    return GridFunction(K.space, K.matrix @ phi.values)


def apply_to_measure(mu: GridMeasure, K: DiscretizedKernel) -> GridMeasure:
    K.space.check_same(mu.space)
    return GridMeasure(K.space, mu.masses @ K.matrix)
