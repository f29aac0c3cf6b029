"""
Principal eigenpair of a weighted kernel by power iteration, the associated
h-transform, the invariant measure of the normalized evolution, and the two
routes to the scaled cumulant generating function.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .kernels import DiscretizedKernel
from .state_space import GridFunction, GridMeasure, integrate

DEFAULT_TOL = 1e-10
DEFAULT_MAX_ITER = 100_000
AVERAGE_WINDOW = 10


class ConvergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class PrincipalEigenpair:
    lambda_cap: float
    h: GridFunction
    residual: float  # ||K h - Lambda h||_{L^inf_W}
    iterations: int
    normalization: str
    W: Optional[GridFunction] = None

    @property
    def relative_residual(self) -> float:
        return self.residual / self.lambda_cap

    def rescaled(self, s: float) -> "PrincipalEigenpair":
        if not s > 0:
            raise ValueError("rescaling factor must be positive")
        return replace(self, h=GridFunction(self.h.space, s * self.h.values),
                       residual=s * self.residual, normalization="custom")

    def normalized(self, mode: str, eta: Optional[GridMeasure] = None) -> "PrincipalEigenpair":
        """Renormalize ``h``: ``"sup_W"`` (``||h/W||_inf = 1``) or ``"eta_mass"`` (``eta(h) = 1``)."""
        if mode == "sup_W":
            W = self.W.values if self.W is not None else 1.0
            s = 1.0 / np.max(self.h.values / W)
        elif mode == "eta_mass":
            if eta is None:
                eta = GridMeasure.uniform(self.h.space)
            s = 1.0 / integrate(eta, self.h)
        else:
            raise ValueError(f"unknown normalization {mode!r}")
        return replace(self.rescaled(s), normalization=mode)


def principal_eigenpair(K: DiscretizedKernel, W: Optional[GridFunction] = None,
                        tol: float = DEFAULT_TOL,
                        max_iter: int = DEFAULT_MAX_ITER) -> PrincipalEigenpair:
    """Power iteration from ``h = 1`` with ``L^inf_W`` renormalization.

    The eigenvalue is the renormalization factor averaged over the last ten
    iterations, taken once the step-to-step change has stayed below ``tol``
    for ten iterations.  Raises :class:`ConvergenceError` after ``max_iter``.
    """
    if W is None:
        W = GridFunction.constant(K.space, 1.0)
    K.space.check_same(W.space)
    if np.any(W.values < 1):
        raise ValueError("W must satisfy W >= 1")
    M, w = K.matrix, W.values
    if not np.all(M.sum(axis=1) > 0):
        raise ValueError("kernel has a zero row")
    h = np.ones(K.n)
    h /= np.max(h / w)
    factors = []
    settled = 0
    for it in range(1, max_iter + 1):
        v = M @ h
        g = float(np.max(v / w))
        if not (g > 0 and math.isfinite(g)):
            raise ConvergenceError(f"renormalization factor degenerated to {g} at iteration {it}")
        v /= g
        change = float(np.max(np.abs(v - h) / w))
        h = v
        factors.append(g)
        settled = settled + 1 if change <= tol else 0
        if settled >= AVERAGE_WINDOW:
            lam = float(np.mean(factors[-AVERAGE_WINDOW:]))
            residual = float(np.max(np.abs(M @ h - lam * h) / w))
            if residual <= tol * lam:
                break
    else:
        raise ConvergenceError(
            f"power iteration did not converge in {max_iter} iterations "
            f"(last relative change {change:.3e}); the dominant eigenvalue may be "
            "degenerate (periodic or reducible kernel)"
        )
    if np.any(h <= 0):
        raise ConvergenceError("eigenvector has nonpositive entries; kernel may be reducible")
    return PrincipalEigenpair(lam, GridFunction(K.space, h), residual, it, "sup_W", W)


@dataclass(frozen=True)
class HTransform:
    Q_h: DiscretizedKernel
    mu_h: GridMeasure
    h: GridFunction
    lambda_cap: float
    row_deviation: float  # max |Q_h 1 - 1| before the final row renormalization
    iterations: int

    def lyapunov_mass(self, W: GridFunction) -> float:
        """``mu_h(W / h)``, finite by construction on a grid."""
        return float(self.mu_h.masses @ (W.values / self.h.values))


def stationary_law(Q: DiscretizedKernel, tol: float = 1e-14,
                   max_iter: int = DEFAULT_MAX_ITER, start: Optional[np.ndarray] = None):
    """Left fixed point of a Markov kernel by power iteration on the transpose."""
    M = Q.matrix
    pi = np.full(Q.n, 1.0 / Q.n) if start is None else np.asarray(start, dtype=float)
    for it in range(1, max_iter + 1):
        nxt = pi @ M
        nxt /= nxt.sum()
        step = float(np.sum(np.abs(nxt - pi)))
        pi = nxt
        if step <= tol:
            return pi, it
    raise ConvergenceError(f"stationary law did not converge in {max_iter} iterations")


def h_transform(K: DiscretizedKernel, pair: PrincipalEigenpair,
                tol: float = 1e-14, max_iter: int = DEFAULT_MAX_ITER) -> HTransform:
    """``Q_h(x, dy) = K(x, dy) h(y) / (Lambda h(x))`` and its invariant law."""
    if pair.relative_residual > 1e-6:
        raise ValueError(f"eigen residual {pair.relative_residual:.2e} too large for an h-transform")
    h = pair.h.values
    if np.any(h <= 0):
        raise ValueError("h must be strictly positive")
    Qh = K.matrix * h[None, :] / (pair.lambda_cap * h[:, None])
    rows = Qh.sum(axis=1)
    deviation = float(np.max(np.abs(rows - 1.0)))
    if deviation > 1e-6:
        raise ValueError(f"h-transform rows deviate from 1 by {deviation:.2e}")
    Qh = Qh / rows[:, None]
    Q_h = DiscretizedKernel(K.space, Qh, markov=True, label=f"h-transform[{K.label}]")
    pi, its = stationary_law(Q_h, tol=tol, max_iter=max_iter)
    return HTransform(Q_h, GridMeasure(K.space, pi), pair.h, pair.lambda_cap, deviation, its)


def invariant_measure(ht: HTransform, W: Optional[GridFunction] = None) -> GridMeasure:
    """Fixed point of the normalized evolution: ``mu_h(h^{-1} .) / mu_h(h^{-1})``."""
    m = ht.mu_h.masses / ht.h.values
    mu = GridMeasure(ht.h.space, m / m.sum())
    if W is not None and not math.isfinite(integrate(mu, W)):
        raise ArithmeticError("invariant measure does not integrate W")
    return mu


def scgf_spectral(pair: PrincipalEigenpair) -> float:
    if not pair.lambda_cap > 0:
        raise ValueError("Lambda must be positive")
    return math.log(pair.lambda_cap)


def log_mass_increments(K: DiscretizedKernel, mu: GridMeasure, k_max: int):
    """Per-step ``log`` of the total mass under stepwise-normalized propagation,
    together with the final normalized measure."""
    K.space.check_same(mu.space)
    M = K.matrix
    m = mu.normalized().masses
    out = np.empty(k_max)
    for k in range(k_max):
        m = m @ M
        z = m.sum()
        if not z > 0:
            raise ArithmeticError(
                f"total mass underflowed to zero at step {k + 1}; a zero row is reachable"
            )
        out[k] = math.log(z)
        m = m / z
    return out, m


def scgf_growth(K: DiscretizedKernel, mu: GridMeasure, k_max: int) -> np.ndarray:
    """``s_k = (1/k) log mu(K^k 1)`` for ``k = 1..k_max``, computed in log space."""
    if k_max < 2:
        raise ValueError("k_max must be at least 2")
    incr, _ = log_mass_increments(K, mu, k_max)
    return np.cumsum(incr) / np.arange(1, k_max + 1)


def creation_rate_check(K: DiscretizedKernel, mu_star: GridMeasure,
                        pair: PrincipalEigenpair) -> float:
    """``|mu*(K 1) - Lambda|``."""
    K.space.check_same(mu_star.space)
    return abs(float(mu_star.masses @ K.row_sums) - pair.lambda_cap)


@dataclass(frozen=True)
class SpectralSolution:
    """Everything derived from one kernel: eigenpair, h-transform, fixed point."""

    kernel: DiscretizedKernel
    pair: PrincipalEigenpair
    htransform: HTransform
    mu_star: GridMeasure

    @property
    def lambda_cap(self) -> float:
        return self.pair.lambda_cap

    @property
    def scgf(self) -> float:
        return scgf_spectral(self.pair)


def solve(K: DiscretizedKernel, W: Optional[GridFunction] = None, tol: float = DEFAULT_TOL,
          max_iter: int = DEFAULT_MAX_ITER) -> SpectralSolution:
    pair = principal_eigenpair(K, W, tol=tol, max_iter=max_iter)
    ht = h_transform(K, pair, max_iter=max_iter)
    return SpectralSolution(K, pair, ht, invariant_measure(ht, W))
