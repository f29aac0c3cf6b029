"""
The normalized Feynman-Kac evolution ``Phi_k(mu) = mu K^k / mu(K^k 1)`` and
geometric-rate fits of its convergence to the fixed point.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from .kernels import DiscretizedKernel
from .scenario import ScenarioConfig
from .spectral import DEFAULT_MAX_ITER, solve
from .state_space import GridFunction, GridMeasure, weighted_sup_norm

K_MIN = 5
MIN_FIT_POINTS = 5
# mu* must be resolved below the fit floor; 1e-10 leaves ~1e-11 errors in mu*
CONVERGENCE_TOL = 1e-13
DEFECT_FACTOR = 100.0


def propagate(mu: GridMeasure, K: DiscretizedKernel, k: int) -> GridMeasure:
    """``Phi_k(mu)``, normalizing after every step."""
    if k < 0:
        raise ValueError("k must be nonnegative")
    K.space.check_same(mu.space)
    m = mu.normalized().masses
    for step in range(k):
        m = m @ K.matrix
        z = m.sum()
        if not z > 0:
            raise ArithmeticError(f"total mass underflowed to zero at step {step + 1}")
        m = m / z
    return GridMeasure(mu.space, m)


def trajectory(mu: GridMeasure, K: DiscretizedKernel, k_max: int) -> np.ndarray:
    """Rows ``Phi_0(mu), ..., Phi_{k_max}(mu)`` as node masses."""
    K.space.check_same(mu.space)
    out = np.empty((k_max + 1, K.n))
    m = mu.normalized().masses
    out[0] = m
    for k in range(1, k_max + 1):
        m = m @ K.matrix
        z = m.sum()
        if not z > 0:
            raise ArithmeticError(f"total mass underflowed to zero at step {k}")
        m = m / z
        out[k] = m
    return out


def fit_geometric(k, errors):
    """Least squares of ``log e_k = log C + k log alpha``; returns ``(alpha, C, r2)``."""
    k = np.asarray(k, dtype=float)
    y = np.log(np.asarray(errors, dtype=float))
    slope, intercept = np.polyfit(k, y, 1)
    resid = y - (slope * k + intercept)
    ss_tot = float(np.sum((y - y.mean()) ** 2))
    r2 = 1.0 - float(np.sum(resid**2)) / ss_tot if ss_tot > 0 else 1.0
    return math.exp(slope), math.exp(intercept), r2


@dataclass(frozen=True)
class ConvergenceReport:
    k_values: np.ndarray
    errors: np.ndarray
    fitted_rate: float  # per step; NaN when unfittable
    fitted_prefactor: float
    fit_r2: float
    mode: str  # "observable" or "weighted_tv"
    floor: float
    window: tuple  # (k_lo, k_hi) used in the fit, inclusive
    fittable: bool
    converged_at_start: bool
    dt: float = 1.0  # physical time per step

    @property
    def times(self) -> np.ndarray:
        return self.k_values * self.dt

    @property
    def kappa(self) -> float:
        """Decay rate per unit physical time, ``-log(rate) / dt``."""
        if not self.fittable:
            return float("nan")
        return -math.log(self.fitted_rate) / self.dt

    @property
    def passing(self) -> bool:
        return self.fittable and 0.0 < self.fitted_rate < 1.0

    def window_monotone(self, slack: float = 0.1) -> bool:
        """``e_{k+1} <= e_k (rate + slack)`` across the fit window."""
        if not self.fittable:
            return False
        lo, hi = self.window
        e = self.errors[lo:hi + 1]
        return bool(np.all(e[1:] <= e[:-1] * (self.fitted_rate + slack)))


def _report(errors, floor, mode, dt, k_min=K_MIN) -> ConvergenceReport:
    errors = np.asarray(errors, dtype=float)
    k = np.arange(len(errors))
    at_start = bool(errors[0] <= 1e-8)
    below = np.flatnonzero(errors <= floor)
    below = below[below >= k_min]
    k_hi = int(below[0] - 1) if below.size else len(errors) - 1
    lo = min(k_min, len(errors) - 1)
    usable = k_hi - lo + 1
    nan = float("nan")
    if at_start or usable < MIN_FIT_POINTS:
        return ConvergenceReport(k, errors, nan, nan, nan, mode, floor, (lo, k_hi), False,
                                 at_start, dt)
    rate, pref, r2 = fit_geometric(k[lo:k_hi + 1], errors[lo:k_hi + 1])
    return ConvergenceReport(k, errors, rate, pref, r2, mode, floor, (lo, k_hi), True, at_start, dt)


def convergence_report(mu: GridMeasure, K: DiscretizedKernel, mu_star: GridMeasure,
                       W: GridFunction, phi: Optional[GridFunction] = None,
                       k_max: int = 200, k_min: int = K_MIN, dt: float = 1.0) -> ConvergenceReport:
    """Errors ``|Phi_k(mu)(phi) - mu*(phi)|`` (observable mode, when ``phi`` is given)
    or ``rho_W(Phi_k(mu), mu*)`` (weighted total variation), with a log-linear fit.

    The fit runs from ``k_min`` up to the last step before the errors reach the
    floor ``max(1e-12, 1e-14 ||phi||_W, 100 d)``, where ``d`` is the one-step
    defect of ``mu_star`` in the same error metric: errors cannot be resolved
    below the accuracy of the fixed point itself.
    """
    mu_star.space.check_same(mu.space)
    traj = trajectory(mu, K, k_max)
    one_step = propagate(mu_star, K, 1).masses
    if phi is None:
        errors = np.abs(traj - mu_star.masses[None, :]) @ W.values
        defect = float(np.abs(one_step - mu_star.masses) @ W.values)
        mode, scale = "weighted_tv", 1.0
    else:
        target = float(mu_star.masses @ phi.values)
        errors = np.abs(traj @ phi.values - target)
        defect = abs(float(one_step @ phi.values) - target)
        mode, scale = "observable", weighted_sup_norm(phi, W)
    floor = max(1e-12, 1e-14 * scale, DEFECT_FACTOR * defect)
    return _report(errors, floor, mode, dt, k_min)


def continuous_convergence(mu: GridMeasure, scenario: ScenarioConfig, t_max: float,
                           phi: Optional[GridFunction] = None, tol: float = CONVERGENCE_TOL,
                           max_iter: int = DEFAULT_MAX_ITER) -> ConvergenceReport:
    """Convergence of the time-discretized evolution indexed by physical time.

    ``k_max = ceil(t_max / dt)`` steps of ``e^{dt f} Q_dt``; the fitted rate is
    per step and :attr:`ConvergenceReport.kappa` converts it to physical time.
    """
    if scenario.family != "euler_maruyama":
        raise ValueError("continuous_convergence needs an euler_maruyama scenario")
    if not t_max >= 0:
        raise ValueError("t_max must be nonnegative")
    space = mu.space
    K = scenario.kernel(space)
    W = scenario.lyapunov_function(space)
    sol = solve(K, W, tol=tol, max_iter=max_iter)
    k_max = int(math.ceil(t_max / scenario.dt - 1e-9))
    return convergence_report(mu, K, sol.mu_star, W, phi, k_max=k_max, dt=scenario.dt)
