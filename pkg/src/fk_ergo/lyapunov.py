"""
Drift (Lyapunov) and minorization certificates for weighted kernels, the
closed-form beta bounds of the Gaussian examples, and generator drift profiles
for diffusions with ``sigma = sqrt(2)``, i.e. ``L = b d/dx + d^2/dx^2``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .expressions import Expr, as_expr
from .kernels import DiscretizedKernel
from .state_space import CompactFamily, GridFunction, GridMeasure, GridSpace

DRIFT_SLACK = 1e-10
MINORIZATION_SLACK = 1e-12


class CertificateError(ValueError):
    pass


def dmc_beta_bound(a: float, sigma: float) -> float:
    """Strict upper bound on beta for ``W = exp(beta x^2)`` under the Gaussian walk
    weighted by ``exp(-V)`` with ``V(x) >= a x^2 - c``."""
    if not (a > 0 and sigma > 0):
        raise ValueError(f"a and sigma must be positive, got a={a}, sigma={sigma}")
    # (a/2)(sqrt(1 + u) - 1) with u = 2/(a sigma^2), rationalized against cancellation
    u = 2.0 / (a * sigma**2)
    bound = 0.5 * a * u / (math.sqrt(1.0 + u) + 1.0)
    assert bound < 0.5 / sigma**2
    return bound


def ou_beta_bound(rho: float, sigma: float) -> float:
    """Strict upper bound ``(1 - rho^2) / (2 sigma^2)`` for the discrete OU process."""
    if not -1.0 < rho < 1.0:
        raise ValueError(f"|rho| < 1 required, got {rho}")
    if not sigma > 0:
        raise ValueError(f"sigma must be positive, got {sigma}")
    return (1.0 - rho**2) / (2.0 * sigma**2)


def gaussian_lyapunov_action(space: GridSpace, beta: float, sigma: float,
                             rho: float = 1.0) -> GridFunction:
    """Exact ``QW`` on the whole line for ``W = exp(beta x^2)`` and ``Q(x, .) = N(rho x, sigma^2)``.

    ``rho = 1`` is the Gaussian random walk.  No domain truncation.
    """
    s = 1.0 - 2.0 * beta * sigma**2
    if not s > 0:
        raise ValueError("QW is infinite unless beta < 1/(2 sigma^2)")
    x = space.nodes
    return GridFunction(space, np.exp(beta * rho**2 * x**2 / s) / math.sqrt(s))


# -- drift ---------------------------------------------------------------

@dataclass(frozen=True)
class DriftCertificate:
    W: GridFunction
    compacts: CompactFamily
    gamma: np.ndarray
    b: np.ndarray
    action: GridFunction  # Q^f W at the nodes
    flagged: tuple = ()  # indices whose complement is empty

    def residuals(self) -> np.ndarray:
        """``max_x [Q^f W - gamma_n W - b_n 1_{K_n}]`` per compact (<= 0 when valid)."""
        out = []
        for n in range(len(self.compacts)):
            rhs = self.gamma[n] * self.W.values + self.b[n] * self.compacts.mask(n)
            out.append(np.max(self.action.values - rhs))
        return np.array(out)

    def is_valid(self, slack: float = DRIFT_SLACK) -> bool:
        scale = np.maximum(1.0, np.max(self.action.values))
        return bool(np.all(self.residuals() <= slack * scale))

    @property
    def monotone(self) -> bool:
        return bool(np.all(np.diff(self.gamma) <= 0))


def drift_ratio(K: DiscretizedKernel, W: GridFunction) -> GridFunction:
    """``(Q^f W) / W`` at the nodes."""
    K.space.check_same(W.space)
    return GridFunction(K.space, (K.matrix @ W.values) / W.values)


def drift_certificate(action: GridFunction, W: GridFunction,
                      compacts: CompactFamily) -> DriftCertificate:
    """Tight drift constants from precomputed values of ``Q^f W``.

    ``gamma_n`` is the supremum of ``Q^f W / W`` outside ``K_n`` and ``b_n``
    the smallest constant that closes the inequality on ``K_n``.
    """
    action.space.check_same(W.space)
    W.space.check_same(compacts.space)
    if np.any(W.values < 1):
        raise CertificateError("Lyapunov function must satisfy W >= 1 at every node")
    ratio = action.values / W.values
    gammas, bs, flagged = [], [], []
    last = None
    for n in range(len(compacts)):
        inside = compacts.mask(n)
        if np.all(inside):
            if last is None:
                raise CertificateError("every compact covers the grid; no complement to certify")
            g = last
            flagged.append(n)
        else:
            g = float(np.max(ratio[~inside]))
            last = g
        excess = action.values[inside] - g * W.values[inside]
        gammas.append(g)
        bs.append(max(0.0, float(np.max(excess))))
    return DriftCertificate(W, compacts, np.array(gammas), np.array(bs), action, tuple(flagged))


def certify_drift(K: DiscretizedKernel, W: GridFunction,
                  compacts: CompactFamily) -> DriftCertificate:
    K.space.check_same(W.space)
    return drift_certificate(GridFunction(K.space, K.matrix @ W.values), W, compacts)


# -- minorization ----------------------------------------------------------

@dataclass(frozen=True)
class MinorizationCertificate:
    compacts: CompactFamily
    alpha: np.ndarray
    eta: tuple  # GridMeasure per compact

    def is_valid(self, K: DiscretizedKernel, slack: float = MINORIZATION_SLACK) -> bool:
        for n, S in enumerate(self.compacts.sets):
            lower = self.alpha[n] * self.eta[n].masses
            if np.any(K.matrix[S] < lower[None, :] - slack):
                return False
        return True


def certify_minorization(K: DiscretizedKernel,
                         compacts: CompactFamily) -> MinorizationCertificate:
    """Minorize each ``K_n`` by the uniform law on its nodes.

    ``alpha_n = |K_n| * min_{x, y in K_n} density(x, y)``, which on the grid is
    the node count times the smallest matrix entry of the ``K_n`` block.
    """
    K.space.check_same(compacts.space)
    alphas, etas = [], []
    for S in compacts.sets:
        block = K.matrix[np.ix_(S, S)]
        if np.any(block <= 0):
            i, j = np.argwhere(block <= 0)[0]
            raise CertificateError(
                f"zero kernel entry inside a compact at nodes ({S[i]}, {S[j]}); "
                "no minorization by the uniform law on it"
            )
        alphas.append(len(S) * float(block.min()))
        etas.append(GridMeasure.uniform(K.space, S))
    return MinorizationCertificate(compacts, np.array(alphas), tuple(etas))


# -- generator drift (continuous time) -------------------------------------

@dataclass(frozen=True)
class GeneratorDriftProfile:
    W_spec: str
    ratio: GridFunction  # ((L + f) W) / W
    auxiliary_spec: str
    auxiliary_ratio: GridFunction  # ((L + f) aux) / aux
    bound_c: float
    beta: float
    theta: float
    bound: Optional[GridFunction] = None  # analytic upper bound on the ratio, where stated
    radius: Optional[float] = None  # the bound applies for |x| >= radius
    notes: tuple = field(default=())

    @property
    def epsilon(self) -> GridFunction:
        """``aux / W`` at the nodes."""
        x = self.ratio.space.nodes
        return GridFunction(self.ratio.space, as_expr(self.auxiliary_spec)(x) / as_expr(self.W_spec)(x))

    def bound_holds(self, tol: float = 1e-9) -> bool:
        if self.bound is None:
            return True
        x = self.ratio.space.nodes
        far = np.abs(x) >= self.radius
        gap = self.ratio.values[far] - self.bound.values[far]
        return bool(np.all(gap <= tol * np.maximum(1.0, np.abs(self.bound.values[far]))))


def generator_drift_reversible(U_spec, f_spec, beta: float,
                               space: GridSpace) -> GeneratorDriftProfile:
    """Profile for ``b = -U'`` and ``W = exp(beta U)``:
    ``(L + f) W / W = -beta (1 - beta) U'^2 + beta U'' + f``."""
    if not 0.5 < beta < 1.0:
        raise ValueError(f"reversible profile needs 1/2 < beta < 1, got {beta}")
    U, f = as_expr(U_spec), as_expr(f_spec)
    x = space.nodes
    dU, d2U, fx = U.derivative()(x), U.derivative(2)(x), f(x)

    def ratio(t):
        return -t * (1.0 - t) * dU**2 + t * d2U + fx

    theta = 0.5 * (0.5 + beta)
    aux = ratio(theta)
    return GeneratorDriftProfile(
        W_spec=f"exp({beta!r}*({U.text}))",
        ratio=GridFunction(space, ratio(beta)),
        auxiliary_spec=f"exp({theta!r}*({U.text}))",
        auxiliary_ratio=GridFunction(space, aux),
        bound_c=float(aux.max()),
        beta=beta,
        theta=theta,
    )


def _hypothesis_radius(x, ok):
    """Smallest grid radius beyond which ``ok`` holds at every node."""
    r = np.abs(x)
    bad = r[~ok]
    if bad.size == 0:
        return 0.0
    beyond = r[r > bad.max()]
    if beyond.size == 0:
        return math.inf
    return float(beyond.min())


def generator_drift_polynomial(drift_spec, f_spec, q: float, delta: float, beta: float,
                               space: GridSpace, a: Optional[float] = None,
                               p: Optional[float] = None) -> GeneratorDriftProfile:
    """Profile for ``W = exp(beta |x|^q)`` under a drift with ``b(x) x <= -delta |x|^q``
    far out, in dimension one.

    The returned ``bound`` is ``-beta q (delta - beta q)|x|^{2q-2} + beta q (q - 1)|x|^{q-2}
    + a |x|^p`` and ``radius`` is the smallest grid radius beyond which the drift and
    weight hypotheses hold at the nodes.
    """
    if not q > 1:
        raise ValueError(f"q > 1 required, got {q}")
    if not delta > 0:
        raise ValueError(f"delta > 0 required, got {delta}")
    if not 0 < beta < delta / q:
        raise ValueError(f"beta must lie in (0, delta/q) = (0, {delta / q:.6g}), got {beta}")
    b, f = as_expr(drift_spec), as_expr(f_spec)
    x = space.nodes
    ax = np.abs(x)
    bx, fx = b(x), f(x)
    with np.errstate(divide="ignore"):
        pow_q2 = ax ** (q - 2.0)

    def ratio(t):
        # x |x|^{q-2} -> 0 at the origin for q > 1
        core = t * q * bx * x * np.where(ax > 0, pow_q2, 0.0)
        lap = t * q * (q - 1.0) * pow_q2
        return core + lap + (t * q) ** 2 * ax ** (2 * q - 2) + fx

    notes = []
    if q < 2 and np.any(ax == 0):
        notes.append("|x|^(q-2) is singular at 0 for q < 2; ratio is +inf at x = 0")
    if a is None or p is None:
        a = 0.0 if a is None else a
        p = 0.0 if p is None else p
    if not p < 2 * q - 2:
        raise ValueError(f"weight growth exponent p={p} must be < 2q - 2 = {2 * q - 2}")
    with np.errstate(divide="ignore", invalid="ignore"):
        ok = (bx * x <= -delta * ax**q + 1e-12) & (fx <= a * ax**p + 1e-12)
        bound = (-beta * q * (delta - beta * q) * ax ** (2 * q - 2)
                 + beta * q * (q - 1.0) * pow_q2 + a * ax**p)
    radius = _hypothesis_radius(x, ok)
    theta = beta / 2.0
    aux = ratio(theta)
    finite = np.isfinite(aux)
    return GeneratorDriftProfile(
        W_spec=f"exp({beta!r}*abs(x)**{q!r})",
        ratio=GridFunction(space, ratio(beta)),
        auxiliary_spec=f"exp({theta!r}*abs(x)**{q!r})",
        auxiliary_ratio=GridFunction(space, aux),
        bound_c=float(aux[finite].max()),
        beta=beta,
        theta=theta,
        bound=GridFunction(space, bound),
        radius=radius,
        notes=tuple(notes),
    )
