"""
Behaviour of the time-discretized weighted semigroup ``e^{dt f} Q_dt`` on the
torus as the time step shrinks: principal eigenvalue bias, eigenvector bounds,
physical-time decay rates, and the uniform minorization over a fixed horizon.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .kernels import tilt_kernel
from .scenario import ScenarioConfig
from .semigroup import CONVERGENCE_TOL, MIN_FIT_POINTS, convergence_report, fit_geometric
from .spectral import DEFAULT_MAX_ITER, solve
from .state_space import GridFunction, GridMeasure, GridSpace


def _torus_scenario(scenario: ScenarioConfig, space: GridSpace):
    if scenario.family != "euler_maruyama" or not space.periodic:
        raise ValueError("uniform-in-dt studies need an euler_maruyama scenario on the torus")


def steps_for(T: float, dt: float) -> int:
    """``ceil(T / dt)`` with a guard against representation error (0.3/0.1 -> 3)."""
    return int(math.ceil(T / dt - 1e-9))


def richardson(dt_values, values) -> float:
    """Linear extrapolation to ``dt = 0`` from the two smallest time steps."""
    dt = np.asarray(dt_values, dtype=float)
    v = np.asarray(values, dtype=float)
    a, b = np.argsort(dt)[:2]
    return float((dt[b] * v[a] - dt[a] * v[b]) / (dt[b] - dt[a]))


def matrix_power_scaled(A: np.ndarray, k: int):
    """``A^k = B * exp(log_scale)`` by repeated squaring, rescaling after every product."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    n = A.shape[0]
    result, log_r = np.eye(n), 0.0
    base, log_b = np.array(A, dtype=float), 0.0
    s = base.max()
    base, log_b = base / s, math.log(s)
    while k:
        if k & 1:
            result = result @ base
            s = result.max()
            result, log_r = result / s, log_r + log_b + math.log(s)
        k >>= 1
        if k:
            base = base @ base
            s = base.max()
            base, log_b = base / s, 2.0 * log_b + math.log(s)
    return result, log_r


@dataclass(frozen=True)
class UniformDtReport:
    dt_values: np.ndarray
    lambda_dt: np.ndarray  # log(Lambda_dt) / dt
    c_dt: np.ndarray  # (lambda_dt - lambda_ref) / dt
    h_min: np.ndarray  # extrema of h_dt normalized by eta(h_dt) = 1
    h_max: np.ndarray
    kappa_dt: np.ndarray  # fitted physical-time decay rate
    kappa_r2: np.ndarray
    lambda_ref: float
    T: float
    scenario_digest: str = ""
    notes: tuple = field(default=())

    @property
    def epsilon(self) -> float:
        """Largest ``eps`` with ``eps <= h_dt <= 1/eps`` for every tested ``dt``."""
        return float(min(self.h_min.min(), 1.0 / self.h_max.max()))

    @property
    def bias(self) -> np.ndarray:
        return np.abs(self.lambda_dt - self.lambda_ref)

    @property
    def bias_order(self) -> float:
        """Slope of ``log |lambda_dt - lambda_ref|`` against ``log dt``."""
        ok = self.bias > 0
        if ok.sum() < 2:
            return float("nan")
        slope, _ = np.polyfit(np.log(self.dt_values[ok]), np.log(self.bias[ok]), 1)
        return float(slope)

    @property
    def kappa_spread(self) -> float:
        """``max / min - 1`` over the fitted physical-time rates."""
        k = self.kappa_dt
        return float(k.max() / k.min() - 1.0)

    def c_bounded(self, factor: float = 3.0, slack: float = 1.0) -> bool:
        a = np.abs(self.c_dt)
        return bool(a.max() <= factor * a.min() + slack)


def physical_rate(errors: np.ndarray, stride: int, dt: float, floor: float):
    """Fit ``e(t) ~ C exp(-kappa t)`` on checkpoints ``k = j * stride``, ``j >= 1``,
    up to the last checkpoint above ``floor``.  Returns ``(kappa, r2)``."""
    idx = np.arange(stride, len(errors), stride)
    e = errors[idx]
    below = np.flatnonzero(e <= floor)
    if below.size:
        idx, e = idx[:below[0]], e[:below[0]]
    if len(idx) < MIN_FIT_POINTS:
        return float("nan"), float("nan")
    rate, _, r2 = fit_geometric(idx * dt, e)
    return -math.log(rate), r2


def uniform_dt_study(scenario: ScenarioConfig, space: GridSpace, dt_values, T: float,
                     t_max: float | None = None, mu0: GridMeasure | None = None,
                     tol: float = CONVERGENCE_TOL,
                     max_iter: int = DEFAULT_MAX_ITER) -> UniformDtReport:
    """Eigenvalue bias, eigenvector bounds and decay rates across time steps.

    For every ``dt``: build ``e^{dt f} Q_dt``, solve the eigenproblem with
    ``h`` normalized by the uniform law on the torus, and fit the physical-time
    decay of ``rho(Phi_k(mu0), mu*)`` (``W = 1``) on checkpoints every
    ``ceil(T/dt)`` steps up to ``t_max`` (default ``40 T``).
    """
    _torus_scenario(scenario, space)
    dt_values = np.asarray(sorted(dt_values, reverse=True), dtype=float)
    if np.any(dt_values <= 0):
        raise ValueError("time steps must be positive")
    if not T > 0:
        raise ValueError("T must be positive")
    t_max = 40.0 * T if t_max is None else t_max
    if mu0 is None:
        mu0 = GridMeasure.delta(space, space.lower + 0.5 * space.period)
    W = GridFunction.constant(space, 1.0)
    eta = GridMeasure.uniform(space)
    lam, hmin, hmax, kap, kr2 = [], [], [], [], []
    for dt in dt_values:
        sc = scenario.with_(dt=float(dt))
        K = tilt_kernel(sc.markov_kernel(space), sc.weight_function(space), float(dt))
        try:
            sol = solve(K, W, tol=tol, max_iter=max_iter)
        except Exception as exc:
            raise RuntimeError(f"eigen solve failed at dt={dt}: {exc}") from exc
        pair = sol.pair.normalized("eta_mass", eta)
        lam.append(math.log(pair.lambda_cap) / dt)
        hmin.append(pair.h.values.min())
        hmax.append(pair.h.values.max())
        stride = steps_for(T, dt)
        rep = convergence_report(mu0, K, sol.mu_star, W, k_max=steps_for(t_max, dt), dt=dt)
        k, r2 = physical_rate(rep.errors, stride, dt, rep.floor)
        kap.append(k)
        kr2.append(r2)
    lam = np.array(lam)
    lam_ref = richardson(dt_values, lam)
    return UniformDtReport(
        dt_values=dt_values,
        lambda_dt=lam,
        c_dt=(lam - lam_ref) / dt_values,
        h_min=np.array(hmin),
        h_max=np.array(hmax),
        kappa_dt=np.array(kap),
        kappa_r2=np.array(kr2),
        lambda_ref=lam_ref,
        T=float(T),
        scenario_digest=scenario.digest(),
    )


@dataclass(frozen=True)
class MinorizationUniformity:
    dt_values: np.ndarray
    steps: np.ndarray  # ceil(T / dt)
    alpha_dt: np.ndarray  # largest alpha with alpha eta <= M(x, .) <= eta / alpha
    log_lower: np.ndarray  # log min_{x,y} M(x, y) / eta(y) for the weighted kernel
    log_lower_untilted: np.ndarray  # same for Q_dt alone
    f_sup: float
    T: float

    @property
    def infimum(self) -> float:
        return float(self.alpha_dt.min())

    @property
    def spread(self) -> float:
        """``max / min - 1`` of ``alpha_dt`` across time steps."""
        return float(self.alpha_dt.max() / self.alpha_dt.min() - 1.0)

    @property
    def passes(self) -> bool:
        return self.infimum > 0 and self.spread < 0.5

    def tilt_bound_holds(self) -> bool:
        """Lower bound of the weighted power dominates ``e^{-2 T ||f||} x`` the unweighted one."""
        return bool(np.all(self.log_lower >= -2.0 * self.T * self.f_sup + self.log_lower_untilted - 1e-12))


def _log_ratio_extrema(K_matrix: np.ndarray, k: int):
    B, log_s = matrix_power_scaled(K_matrix, k)
    if np.any(B <= 0):
        raise ArithmeticError("zero entry in the kernel power; the kernel builder is faulty")
    n = K_matrix.shape[0]
    logs = np.log(B) + log_s + math.log(n)  # log of M(x, y) / eta(y) with eta uniform
    return float(logs.min()), float(logs.max())


def minorization_uniformity_check(scenario: ScenarioConfig, space: GridSpace, dt_values,
                                  T: float) -> MinorizationUniformity:
    """Uniform two-sided bound ``alpha eta <= (Q_dt^f)^{ceil(T/dt)}(x, .) <= eta / alpha``
    with ``eta`` the uniform law on the torus."""
    _torus_scenario(scenario, space)
    if not T > 0:
        raise ValueError("T must be positive")
    dt_values = np.asarray(sorted(dt_values, reverse=True), dtype=float)
    alphas, lows, lows0, steps = [], [], [], []
    fvals = scenario.weight_function(space)
    for dt in dt_values:
        sc = scenario.with_(dt=float(dt))
        Q = sc.markov_kernel(space)
        K = tilt_kernel(Q, fvals, float(dt))
        k = steps_for(T, dt)
        lo, hi = _log_ratio_extrema(K.matrix, k)
        lo0, _ = _log_ratio_extrema(Q.matrix, k)
        alphas.append(math.exp(min(lo, -hi)))
        lows.append(lo)
        lows0.append(lo0)
        steps.append(k)
    return MinorizationUniformity(
        dt_values=dt_values,
        steps=np.array(steps),
        alpha_dt=np.array(alphas),
        log_lower=np.array(lows),
        log_lower_untilted=np.array(lows0),
        f_sup=float(np.max(np.abs(fvals.values))),
        T=float(T),
    )
