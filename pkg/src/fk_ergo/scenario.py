"""
Scenario configuration: which Markov kernel, which weight ``f``, which Lyapunov
function, plus the named scenarios used throughout the tests and scripts.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field, replace
from typing import Optional

import numpy as np

from .expressions import Expr, as_expr
from .lyapunov import dmc_beta_bound, ou_beta_bound
from .kernels import (DiscretizedKernel, euler_maruyama_kernel, gaussian_rw_kernel, ou_kernel,
                      tilt_kernel)
from .state_space import GridFunction, GridSpace

FAMILIES = ("gaussian_rw", "ou", "euler_maruyama")


class ScenarioError(ValueError):
    """A scenario parameter violates the hypothesis of the result it relies on."""


@dataclass(frozen=True)
class ScenarioConfig:
    family: str
    sigma: float = 1.0
    rho: Optional[float] = None
    drift: Optional[str] = None
    weight: str = "0"
    dt: Optional[float] = None
    lyapunov: Optional[str] = None
    a: Optional[float] = None
    c: Optional[float] = None
    p: Optional[float] = None
    q: Optional[float] = None
    delta: Optional[float] = None
    beta: Optional[float] = None

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ScenarioError(f"family must be one of {FAMILIES}, got {self.family!r}")
        # parse eagerly so bad expressions fail at load time
        for name in ("drift", "weight", "lyapunov"):
            if getattr(self, name) is not None:
                as_expr(getattr(self, name))

    # -- derived objects -------------------------------------------------

    @property
    def f(self) -> Expr:
        return as_expr(self.weight)

    @property
    def b(self) -> Expr:
        return as_expr(self.drift if self.drift is not None else "0")

    @property
    def scale(self) -> float:
        """Exponent scale of the tilt: 1 in discrete time, ``dt`` for discretized SDEs."""
        return float(self.dt) if self.family == "euler_maruyama" else 1.0

    def markov_kernel(self, space: GridSpace) -> DiscretizedKernel:
        if self.family == "gaussian_rw":
            return gaussian_rw_kernel(space, self.sigma)
        if self.family == "ou":
            return ou_kernel(space, self.rho, self.sigma)
        drift = GridFunction(space, self.b(space.nodes))
        return euler_maruyama_kernel(space, drift, self.sigma, self.dt)

    def weight_function(self, space: GridSpace) -> GridFunction:
        return GridFunction(space, self.f(space.nodes))

    def kernel(self, space: GridSpace) -> DiscretizedKernel:
        """The weighted kernel ``e^{scale f} Q``."""
        return tilt_kernel(self.markov_kernel(space), self.weight_function(space), self.scale)

    def lyapunov_function(self, space: GridSpace) -> GridFunction:
        if self.lyapunov is not None:
            values = as_expr(self.lyapunov)(space.nodes)
        elif self.beta is not None and self.family in ("gaussian_rw", "ou"):
            values = np.exp(self.beta * space.nodes**2)
        else:
            values = np.ones(space.n_nodes)
        if np.any(values < 1):
            raise ScenarioError("Lyapunov function must satisfy W >= 1 at every node")
        return GridFunction(space, values)

    def with_(self, **changes) -> "ScenarioConfig":
        return replace(self, **changes)

    def to_dict(self) -> dict:
        return {k: v for k, v in asdict(self).items() if v is not None}

    def digest(self) -> str:
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()[:12]

    # -- hypothesis checks ------------------------------------------------

    def violations(self, space: Optional[GridSpace] = None) -> list:
        """Human-readable list of violated parameter hypotheses (empty if fine)."""
        out = []
        if not self.sigma > 0:
            out.append(f"sigma must be > 0 (got {self.sigma})")
            return out
        if self.family == "ou":
            if self.rho is None or not -1 < self.rho < 1:
                out.append(f"OU requires |rho| < 1 (got rho={self.rho})")
                return out
            if self.beta is not None:
                bound = ou_beta_bound(self.rho, self.sigma)
                if not 0 < self.beta < bound:
                    out.append(
                        f"beta >= (1-rho^2)/(2 sigma^2): beta={self.beta} must lie in (0, {bound:.6g})"
                    )
            if self.p is not None and not 0 <= self.p < 2:
                out.append(f"OU weight growth needs 0 <= p < 2 (got p={self.p})")
        if self.family == "gaussian_rw" and self.beta is not None:
            if self.a is None:
                out.append("gaussian_rw with beta needs the confinement constant a (V >= a x^2 - c)")
            elif not self.a > 0:
                out.append(f"confinement constant a must be > 0 (got {self.a})")
            else:
                bound = dmc_beta_bound(self.a, self.sigma)
                if not 0 < self.beta < bound:
                    out.append(
                        "beta >= (a/2)(sqrt(1 + 2/(a sigma^2)) - 1): "
                        f"beta={self.beta} must lie in (0, {bound:.6g})"
                    )
        if self.family == "euler_maruyama":
            if self.dt is None or not self.dt > 0:
                out.append(f"euler_maruyama requires dt > 0 (got {self.dt})")
            if self.drift is None:
                out.append("euler_maruyama requires a drift expression")
            if space is not None and not space.periodic:
                out.append("euler_maruyama scenarios live on the torus")
            if self.q is not None:
                if not self.q > 1:
                    out.append(f"polynomial drift requires q > 1 (got {self.q})")
                elif self.delta is not None and self.beta is not None:
                    if not 0 < self.beta < self.delta / self.q:
                        out.append(
                            f"beta >= delta/q: beta={self.beta} must lie in (0, {self.delta / self.q:.6g})"
                        )
        if space is not None:
            out.extend(self._grid_violations(space))
        return out

    def _grid_violations(self, space: GridSpace) -> list:
        out = []
        x = space.nodes
        fx = self.f(x)
        if self.family == "gaussian_rw" and self.a is not None and self.a > 0:
            c = self.c if self.c is not None else 0.0
            if np.any(-fx < self.a * x**2 - c - 1e-12):
                out.append(f"V = -f violates V(x) >= a x^2 - c with a={self.a}, c={c} on the grid")
        if self.family == "ou" and self.a is not None and self.p is not None:
            c = self.c if self.c is not None else 0.0
            if np.any(fx > self.a * np.abs(x) ** self.p + c + 1e-12):
                out.append(f"f violates f(x) <= a|x|^p + c with a={self.a}, p={self.p}, c={c}")
        return out

    def validate(self, space: Optional[GridSpace] = None) -> "ScenarioConfig":
        problems = self.violations(space)
        if problems:
            raise ScenarioError("; ".join(problems))
        return self


@dataclass(frozen=True)
class NamedScenario:
    name: str
    description: str
    grid: GridSpace
    config: ScenarioConfig
    start: float = 0.0  # default initial point mass location
    tags: tuple = field(default=())


def _seg(n=321, half=8.0):
    return GridSpace.segment(-half, half, n)


def _torus(n=256):
    return GridSpace.torus(-math.pi, math.pi, n)


SCENARIOS = {
    s.name: s
    for s in [
        NamedScenario(
            "dmc_harmonic",
            "Gaussian random walk (sigma=1) weighted by exp(-x^2); W = exp(0.3 x^2)",
            _seg(),
            ScenarioConfig("gaussian_rw", sigma=1.0, weight="-x**2", a=1.0, c=0.0, beta=0.3),
            start=2.0, tags=("discrete", "oracle"),
        ),
        NamedScenario(
            "dmc_quartic",
            "Gaussian random walk (sigma=0.8) weighted by exp(-x^4/4 - x^2/2)",
            GridSpace.segment(-6.0, 6.0, 301),
            ScenarioConfig("gaussian_rw", sigma=0.8, weight="-x**4/4 - x**2/2", a=0.5, c=0.0,
                           beta=0.2),
            start=1.0, tags=("discrete", "oracle"),
        ),
        NamedScenario(
            "ou_free",
            "Discrete OU (rho=0.5, sigma=1), no weight; W = exp(0.3 x^2)",
            _seg(),
            ScenarioConfig("ou", rho=0.5, sigma=1.0, weight="0", beta=0.3),
            start=3.0, tags=("discrete", "oracle", "markov"),
        ),
        NamedScenario(
            "ou_harmonic",
            "Discrete OU (rho=0.5, sigma=1) weighted by exp(-x^2); W = exp(0.3 x^2)",
            _seg(),
            ScenarioConfig("ou", rho=0.5, sigma=1.0, weight="-x**2", beta=0.3),
            start=2.0, tags=("discrete", "oracle"),
        ),
        NamedScenario(
            "ou_linear",
            "Discrete OU (rho=0.5, sigma=1) weighted by exp(x/2), unbounded above; Lambda = e^(1/2)",
            _seg(),
            ScenarioConfig("ou", rho=0.5, sigma=1.0, weight="0.5*x", a=0.5, p=1.0, c=0.0,
                           beta=0.3),
            start=-1.0, tags=("discrete", "oracle"),
        ),
        NamedScenario(
            "torus_em",
            "Euler-Maruyama on the torus, b = -sin(x), f = cos(x), dt = 0.1",
            _torus(),
            ScenarioConfig("euler_maruyama", sigma=1.0, drift="-sin(x)", weight="cos(x)", dt=0.1),
            start=1.0, tags=("torus", "oracle"),
        ),
        NamedScenario(
            "torus_em_nonrev",
            "Euler-Maruyama on the torus, b = -sin(x) + 0.3 (non-reversible), f = cos(x), dt = 0.1",
            _torus(),
            ScenarioConfig("euler_maruyama", sigma=1.0, drift="-sin(x) + 0.3", weight="cos(x)",
                           dt=0.1),
            start=1.0, tags=("torus", "oracle"),
        ),
        NamedScenario(
            "torus_em_free",
            "Euler-Maruyama on the torus, b = -sin(x), no weight, dt = 0.1",
            _torus(),
            ScenarioConfig("euler_maruyama", sigma=1.0, drift="-sin(x)", weight="0", dt=0.1),
            start=1.0, tags=("torus", "markov"),
        ),
    ]
}


def get_scenario(name: str) -> NamedScenario:
    try:
        return SCENARIOS[name]
    except KeyError:
        raise KeyError(f"unknown scenario {name!r}; known: {sorted(SCENARIOS)}") from None
