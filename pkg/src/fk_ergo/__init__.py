"""
Feynman-Kac semigroups on discretized state spaces: weighted kernels, Lyapunov
and minorization certificates, principal eigenpairs and h-transforms, the
normalized flow and its fixed point, and a particle estimator.
"""
from .state_space import (CompactFamily, GridFunction, GridMeasure, GridSpace, integrate, rho_W,
                          total_variation, weighted_sup_norm)
from .expressions import Expr, ExpressionError
from .kernels import (DiscretizedKernel, euler_maruyama_kernel, gaussian_rw_kernel, ou_kernel,
                      tilt_kernel)
from .lyapunov import (CertificateError, certify_drift, certify_minorization, dmc_beta_bound,
                       generator_drift_polynomial, generator_drift_reversible, ou_beta_bound)
from .scenario import SCENARIOS, NamedScenario, ScenarioConfig, ScenarioError, get_scenario
from .spectral import (ConvergenceError, PrincipalEigenpair, h_transform, invariant_measure,
                       principal_eigenpair, scgf_growth, scgf_spectral, solve)
from .semigroup import continuous_convergence, convergence_report, propagate
from .discretization import minorization_uniformity_check, uniform_dt_study
from .particles import ParticleEnsemble, estimate_observable, particle_step

__version__ = "0.1.0"
