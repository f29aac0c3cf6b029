"""
Study pipelines behind the command line: each takes a :class:`StudySpec`,
writes its CSV files into an output directory and returns the checks it ran.
"""
from __future__ import annotations

import math
from pathlib import Path
from typing import Optional

import numpy as np

from .config import StudySpec
from .discretization import minorization_uniformity_check, uniform_dt_study
from .expressions import as_expr
from .lyapunov import CertificateError, certify_drift, certify_minorization
from .oracle import dense_spectrum
from .particles import replicate
from .reports import Check, StudyResult, check, write_csv
from .semigroup import convergence_report, propagate
from .spectral import creation_rate_check, scgf_growth, solve
from .state_space import CompactFamily, GridFunction, GridMeasure, integrate, rho_W

IDENTITY_TOL = 1e-8


def _starts(spec: StudySpec) -> list:
    return list(spec.get("starts", [spec.start]))


def _solve(spec: StudySpec):
    K = spec.scenario.kernel(spec.grid)
    W = spec.scenario.lyapunov_function(spec.grid)
    return K, W, solve(K, W, tol=spec.solver.tol, max_iter=spec.solver.max_iter)


def _hypothesis_checks(spec: StudySpec) -> list:
    return [Check("hypothesis", msg, float("nan"), float("nan"), False, "holds")
            for msg in spec.scenario.violations(spec.grid)]


def _label(x0: float) -> str:
    return f"x0={x0:g}"


def study_scgf(spec: StudySpec, out: Path) -> StudyResult:
    K, W, sol = _solve(spec)
    k_max = spec.get("k_max", 200)
    tol = spec.get("scgf_tol", 1e-3)
    lam = sol.scgf
    starts = _starts(spec)
    curves = [scgf_growth(K, GridMeasure.delta(spec.grid, x0), k_max) for x0 in starts]
    rows = [[k + 1] + [c[k] for c in curves] for k in range(k_max)]
    files = [write_csv(out / "scgf.csv", ["k"] + [f"s_k[{_label(x)}]" for x in starts], rows)]
    checks = [
        check(f"scgf_two_route[{_label(x)}]",
              f"growth rate two-route gap |s_{k_max} - log Lambda| from {_label(x)}",
              abs(c[-1] - lam), tol)
        for x, c in zip(starts, curves)
    ]
    checks.append(check("creation_rate", "creation-rate identity residual |mu*(K1) - Lambda|",
                        creation_rate_check(K, sol.mu_star, sol.pair), IDENTITY_TOL))
    if spec.scenario.f.is_zero:
        checks.append(check("unweighted_growth", "growth rate of the unweighted kernel |log Lambda|",
                            abs(lam), 1e-10))
    info = [("log Lambda", lam), ("Lambda", sol.lambda_cap),
            ("power iterations", sol.pair.iterations),
            ("eigen residual (relative)", sol.pair.relative_residual)]
    return StudyResult(spec.study, checks, info, files)


def study_converge(spec: StudySpec, out: Path) -> StudyResult:
    K, W, sol = _solve(spec)
    k_max = spec.get("k_max", 200)
    rate_tol = spec.get("rate_tol", 0.05)
    phi = GridFunction(spec.grid, np.broadcast_to(as_expr(spec.get("phi"))(spec.grid.nodes),
                                                  spec.grid.nodes.shape).copy()) \
        if spec.get("phi") else None
    oracle = dense_spectrum(K)
    starts = _starts(spec)
    reports = [convergence_report(GridMeasure.delta(spec.grid, x0), K, sol.mu_star, W, phi,
                                  k_max=k_max) for x0 in starts]
    rows = [[k] + [r.errors[k] for r in reports] for k in range(k_max + 1)]
    files = [write_csv(out / "converge.csv", ["k"] + [f"error[{_label(x)}]" for x in starts], rows)]
    fits = [[_label(x), r.fitted_rate, r.fit_r2, r.window[0], r.window[1], r.floor]
            for x, r in zip(starts, reports)]
    files.append(write_csv(out / "converge_fit.csv",
                           ["start", "fitted_rate", "r2", "k_lo", "k_hi", "floor"], fits))
    checks = []
    for x, r in zip(starts, reports):
        tag = _label(x)
        checks.append(check(f"fit_r2[{tag}]", f"geometric fit r^2 from {tag}", r.fit_r2, 0.99, ">="))
        checks.append(check(f"rate_vs_oracle[{tag}]",
                            f"fitted rate vs dense |lambda_2|/Lambda from {tag}",
                            abs(r.fitted_rate - oracle.ratio), rate_tol))
        checks.append(check(f"rate_below_one[{tag}]", f"fitted contraction rate from {tag}",
                            r.fitted_rate, 1.0, "<"))
    info = [("mode", reports[0].mode), ("oracle ratio |lambda_2|/Lambda", oracle.ratio),
            ("log Lambda", sol.scgf)]
    return StudyResult(spec.study, checks, info, files)


def study_fixed_point(spec: StudySpec, out: Path) -> StudyResult:
    K, W, sol = _solve(spec)
    mu = sol.mu_star
    rows = [[x, m, h, mh] for x, m, h, mh in
            zip(spec.grid.nodes, mu.masses, sol.pair.h.values, sol.htransform.mu_h.masses)]
    files = [write_csv(out / "fixed_point.csv", ["x", "mu_star", "h", "mu_h"], rows)]
    checks = [
        check("fixed_point", "fixed-point residual rho_W(Phi(mu*), mu*)",
              rho_W(propagate(mu, K, 1), mu, W), IDENTITY_TOL),
        check("creation_rate", "creation-rate identity residual |mu*(K1) - Lambda|",
              creation_rate_check(K, mu, sol.pair), IDENTITY_TOL),
        check("h_transform_rows", "h-transform row-sum deviation max |Q_h 1 - 1|",
              sol.htransform.row_deviation, 1e-6),
    ]
    info = [("Lambda", sol.lambda_cap), ("mu*(W)", integrate(mu, W)),
            ("mu_h(W/h)", sol.htransform.lyapunov_mass(W))]
    return StudyResult(spec.study, checks, info, files)


def study_lyapunov(spec: StudySpec, out: Path) -> StudyResult:
    hyp = _hypothesis_checks(spec)
    if hyp:
        return StudyResult(spec.study, hyp, [("scenario", spec.scenario.digest())], [])
    K = spec.scenario.kernel(spec.grid)
    W = spec.scenario.lyapunov_function(spec.grid)
    radii = spec.get("radii", [1.0, 2.0, 3.0, 4.0, 5.0, 6.0])
    compacts = CompactFamily.balls(spec.grid, radii)
    drift = certify_drift(K, W, compacts)
    checks = [
        check("drift_valid", "drift inequality residual max [K W - gamma_n W - b_n 1_Kn]",
              float(np.max(drift.residuals())), 1e-10 * max(1.0, float(drift.action.values.max()))),
        check("gamma_monotone", "largest increase of gamma_n across compacts",
              float(np.max(np.diff(drift.gamma), initial=0.0)), 0.0),
        check("gamma_below_one", "drift contraction gamma_n on the largest compact",
              float(drift.gamma[-1]), 1.0, "<"),
    ]
    try:
        minor = certify_minorization(K, compacts)
        alphas = minor.alpha
        checks.append(check("minorization", "smallest minorization constant alpha_n",
                            float(alphas.min()), 0.0, ">"))
    except CertificateError as exc:
        alphas = np.full(len(compacts), np.nan)
        checks.append(Check("minorization", str(exc), float("nan"), 0.0, False, ">"))
    rows = [[n + 1, r, len(s), g, b, a] for n, (r, s, g, b, a) in
            enumerate(zip(radii, compacts.sets, drift.gamma, drift.b, alphas))]
    files = [write_csv(out / "lyapunov.csv", ["n", "radius", "nodes", "gamma", "b", "alpha"], rows)]
    info = [("flagged compacts (empty complement)", len(drift.flagged))]
    return StudyResult(spec.study, checks, info, files)


def study_uniform_dt(spec: StudySpec, out: Path) -> StudyResult:
    dts, T = spec.get("dt_values"), spec.get("T")
    rep = uniform_dt_study(spec.scenario, spec.grid, dts, T, t_max=spec.get("t_max"),
                           tol=spec.solver.tol, max_iter=spec.solver.max_iter)
    mino = minorization_uniformity_check(spec.scenario, spec.grid, dts, T)
    rows = [list(r) for r in zip(rep.dt_values, mino.steps, rep.lambda_dt, rep.c_dt, rep.h_min,
                                 rep.h_max, rep.kappa_dt, rep.kappa_r2, mino.alpha_dt)]
    files = [write_csv(out / "uniform_dt.csv",
                       ["dt", "steps_per_T", "lambda_dt", "c_dt", "h_min", "h_max", "kappa",
                        "kappa_r2", "alpha"], rows)]
    checks = [
        check("bias_order", "fitted order of |lambda_dt - lambda_ref| in dt", rep.bias_order, 0.9, ">="),
        check("epsilon", "eigenfunction bracket eps <= h_dt <= 1/eps", rep.epsilon, 0.0, ">"),
        check("kappa_spread", "spread max/min - 1 of physical-time rates kappa_dt",
              rep.kappa_spread, 0.2),
        check("alpha_infimum", "minorization constant infimum over dt", mino.infimum, 0.0, ">"),
        check("alpha_spread", "spread max/min - 1 of minorization constants", mino.spread, 0.5),
    ]
    info = [("lambda_ref", rep.lambda_ref), ("epsilon", rep.epsilon), ("T", T)]
    return StudyResult(spec.study, checks, info, files)


def study_particles(spec: StudySpec, out: Path, seed: Optional[int] = None) -> StudyResult:
    x0 = _starts(spec)[0]
    n = spec.get("n_particles", 1000)
    k = spec.get("k", 200)
    n_seeds = spec.get("n_seeds", 30)
    base = spec.get("seed", 0) if seed is None else seed
    observables = spec.get("observables", ["x**2"])
    if n_seeds < 2:
        raise ValueError("[study] n_seeds must be at least 2 for a standard error")
    seeds = [base + i for i in range(n_seeds)]
    K, W, sol = _solve(spec)
    mu0 = GridMeasure.delta(spec.grid, x0)
    s_k = float(scgf_growth(K, mu0, max(k, 2))[k - 1]) / spec.scenario.scale
    phi_k = propagate(mu0, K, k)
    run = replicate(spec.scenario, x0, n, k, seeds, observables, space=spec.grid)
    rows = [[s, g, gb] + [o.values[i] for o in run.observables]
            for i, (s, g, gb) in enumerate(zip(seeds, run.growth.values,
                                               run.growth_after_burn_in.values))]
    files = [write_csv(out / "particles.csv",
                       ["seed", "growth", "growth_after_burn_in"]
                       + [f"obs[{o}]" for o in observables], rows)]
    lam = sol.scgf / spec.scenario.scale
    checks = [
        check("growth_vs_grid", f"particle growth over {k} steps vs grid (1/k) log mu(K^k 1), in SE",
              abs(run.growth.mean - s_k) / run.growth.standard_error, 3.0),
        check("growth_vs_log_lambda", "particle growth after burn-in vs grid log Lambda, in SE",
              abs(run.growth_after_burn_in.mean - lam) / run.growth_after_burn_in.standard_error, 3.0),
    ]
    info = [("grid (1/k) log mu(K^k 1)", s_k), ("grid log Lambda", lam),
            ("particle growth mean", run.growth.mean), ("particle growth SE", run.growth.standard_error)]
    for o, est in zip(observables, run.observables):
        vals = np.broadcast_to(as_expr(o)(spec.grid.nodes), spec.grid.nodes.shape)
        target = float(phi_k.masses @ vals)
        checks.append(check(f"observable[{o}]", f"particle estimate of Phi_k(mu)({o}) vs grid, in SE",
                            abs(est.mean - target) / est.standard_error, 3.0))
        info.append((f"grid Phi_k(mu)({o})", target))
    return StudyResult(spec.study, checks, info, files)


def run_study(spec: StudySpec, out_dir, seed: Optional[int] = None) -> StudyResult:
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    if spec.study == "particles":
        return study_particles(spec, out, seed)
    runner = {
        "scgf": study_scgf,
        "converge": study_converge,
        "fixed-point": study_fixed_point,
        "lyapunov-check": study_lyapunov,
        "uniform-dt": study_uniform_dt,
    }[spec.study]
    return runner(spec, out)
