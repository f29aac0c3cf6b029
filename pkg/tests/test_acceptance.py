"""
Acceptance suite.  Each test evaluates one criterion at its stated tolerance,
prints a single ``PASS``/``FAIL`` line (collected again in the terminal summary)
and asserts the same condition.

Run alone with ``pytest tests/test_acceptance.py -v -s``.
"""
import math
import time
import textwrap

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES, solved
from fk_ergo.cli import main
from fk_ergo.discretization import minorization_uniformity_check, uniform_dt_study
from fk_ergo.kernels import gaussian_rw_kernel, ou_kernel, tilt_kernel
from fk_ergo.lyapunov import (certify_drift, dmc_beta_bound, drift_certificate,
                              gaussian_lyapunov_action, generator_drift_polynomial,
                              generator_drift_reversible, ou_beta_bound)
from fk_ergo.oracle import dense_spectrum, finite_difference_generator_ratio
from fk_ergo.particles import replicate
from fk_ergo.scenario import SCENARIOS
from fk_ergo.semigroup import CONVERGENCE_TOL, convergence_report, propagate
from fk_ergo.spectral import creation_rate_check, h_transform, invariant_measure, scgf_growth, solve
from fk_ergo.state_space import CompactFamily, GridFunction, GridMeasure, GridSpace, rho_W

ALL = sorted(SCENARIOS)


def report(tag, ok, detail):
    line = f"{'PASS' if ok else 'FAIL'} {tag}: {detail}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    return ok


def test_ac01_oracle_equivalence():
    rows, ok = [], True
    for name in ALL:
        s = SCENARIOS[name]
        t0 = time.perf_counter()
        K = s.config.kernel(s.grid)
        sol = solve(K, s.config.lyapunov_function(s.grid), tol=CONVERGENCE_TOL)
        ref = dense_spectrum(K)
        dt = time.perf_counter() - t0
        dlam = abs(sol.lambda_cap - ref.lambda_cap) / ref.lambda_cap
        dh = float(np.max(np.abs(sol.pair.h.values / sol.pair.h.values.max() - ref.right)))
        good = 200 <= s.grid.n_nodes <= 400 and dlam <= 1e-8 and dh <= 1e-6 and dt <= 10
        ok &= good
        rows.append(f"{name} dLambda/Lambda={dlam:.1e} dh={dh:.1e} {dt:.2f}s")
    ok &= len(ALL) >= 5
    assert report("AC1 oracle equivalence (|dLambda|/Lambda<=1e-8, |dh|<=1e-6, <=10 s)", ok,
                  f"{len(ALL)} scenarios; " + "; ".join(rows))


def _two_route(start_label, start_fn):
    out, ok = [], True
    t0 = time.perf_counter()
    for name in ("dmc_harmonic", "ou_harmonic"):
        _, K, _, sol, _ = solved(name)
        gap = abs(scgf_growth(K, start_fn(K, sol), 200)[-1] - sol.scgf)
        ok &= gap <= 1e-3
        out.append(f"{name} |s_200 - log Lambda|={gap:.3e}")
    ok &= time.perf_counter() - t0 <= 5
    return ok, f"start {start_label}: " + "; ".join(out)


def test_ac02_scgf_two_route_from_invariant_measure():
    ok, detail = _two_route("mu*", lambda K, sol: sol.mu_star)
    assert report("AC2 two-route SCGF (<=1e-3) from mu*", ok, detail)


@pytest.mark.xfail(strict=True, reason=(
    "s_k - log Lambda tends to log(mu(h)/mu*(h))/k: for a point mass at 0 on the Gaussian-walk "
    "harmonic scenario this is 0.5*log((A+C)/C)/200 = 3.9e-3 at k = 200, with A = (1+sqrt 3)/2 "
    "and C = (sqrt 3-1)/2, so the 1e-3 target cannot hold for every start at k = 200"))
def test_ac02_scgf_two_route_from_point_mass():
    ok, detail = _two_route("delta_0", lambda K, sol: GridMeasure.delta(K.space, 0.0))
    assert report("AC2 two-route SCGF (<=1e-3) from delta_0", ok, detail)


def test_ac03_creation_rate():
    res = {n: creation_rate_check(solved(n)[1], solved(n)[3].mu_star, solved(n)[3].pair) for n in ALL}
    worst = max(res, key=res.get)
    assert report("AC3 creation rate |mu*(K1) - Lambda| <= 1e-8", res[worst] <= 1e-8,
                  f"worst {worst} {res[worst]:.1e} over {len(ALL)} scenarios")


def test_ac04_fixed_point():
    res = {}
    for n in ALL:
        _, K, W, sol, _ = solved(n)
        res[n] = rho_W(propagate(sol.mu_star, K, 1), sol.mu_star, W)
    worst = max(res, key=res.get)
    assert report("AC4 fixed point rho_W(Phi(mu*), mu*) <= 1e-8", res[worst] <= 1e-8,
                  f"worst {worst} {res[worst]:.1e} over {len(ALL)} scenarios")


def _starts(s):
    x = s.grid.nodes
    return {
        f"delta_{s.start:g}": GridMeasure.delta(s.grid, s.start),
        "uniform[-1.5,-0.5]": GridMeasure.uniform(s.grid, np.flatnonzero((x >= -1.5) & (x <= -0.5))),
        "N(0.7,0.25)": GridMeasure.from_density(s.grid, lambda y: np.exp(-(y - 0.7)**2 / 0.5)),
    }


def test_ac05_geometric_convergence():
    ok, worst_r2, worst_gap = True, 1.0, 0.0
    for name in ALL:
        s, K, W, sol, ref = solved(name)
        for mu in _starts(s).values():
            r = convergence_report(mu, K, sol.mu_star, W, k_max=200)
            gap = abs(r.fitted_rate - ref.ratio)
            ok &= r.fittable and r.fit_r2 >= 0.99 and gap <= 0.05
            worst_r2, worst_gap = min(worst_r2, r.fit_r2), max(worst_gap, gap)
    assert report("AC5 geometric convergence (r2>=0.99, |rate - |l2|/Lambda|<=0.05)", ok,
                  f"{len(ALL)} scenarios x 3 starts; min r2={worst_r2:.5f}, max gap={worst_gap:.1e}")


def test_ac06_lyapunov_certificates():
    seg = GridSpace.segment(-8, 8, 321)
    fam = CompactFamily.balls(seg, [1, 2, 3, 4, 5, 6])
    x = seg.nodes
    W = lambda beta: GridFunction(seg, np.exp(beta * x**2))
    e_f = np.exp(-x**2)
    bound = dmc_beta_bound(1.0, 1.0)
    dmc = tilt_kernel(gaussian_rw_kernel(seg, 1.0), GridFunction(seg, -x**2))
    good = certify_drift(dmc, W(0.3), fam)
    # beta above the bound: the untruncated action, since the finite grid hides the blow-up
    bad_exact = drift_certificate(GridFunction(seg, gaussian_lyapunov_action(seg, 0.45, 1.0).values * e_f),
                                  W(0.45), fam)
    bad_grid = certify_drift(dmc, W(0.45), fam)
    ou = ou_kernel(seg, 0.5, 1.0)
    ou_good = certify_drift(ou, W(0.3), fam)
    ou_bad = drift_certificate(gaussian_lyapunov_action(seg, 0.45, 1.0, 0.5), W(0.45), fam)
    ok = (0.3 < bound < 0.45 and good.is_valid() and good.monotone and good.gamma[-1] < 0.1
          and np.all(bad_exact.gamma >= 1) and bad_grid.gamma[0] >= 1
          and 0.3 < ou_beta_bound(0.5, 1.0) < 0.45 and ou_good.is_valid() and ou_good.monotone
          and ou_good.gamma[-1] < 1 and np.all(ou_bad.gamma >= 1))
    assert report("AC6 Lyapunov certificates (gamma_6<0.1 below bound; gamma_n>=1 above)", ok,
                  f"DMC bound={bound:.6f} gamma(0.3)={np.array2string(good.gamma, precision=2)}; "
                  f"gamma(0.45) min={bad_exact.gamma.min():.2e}; OU bound={ou_beta_bound(0.5, 1.0)} "
                  f"gamma_6(0.3)={ou_good.gamma[-1]:.1e} gamma(0.45) min={ou_bad.gamma.min():.2e}")


def test_ac07_generator_drift():
    errs = []
    for U, b, half, n in [("x**2/2", "-x", 2.0, 201), ("x**4/4 - x**2/2", "-x**3 + x", 1.5, 151)]:
        g = GridSpace.segment(-half, half, n)
        p = generator_drift_reversible(U, "0", 0.75, g)
        fd = finite_difference_generator_ratio(b, p.W_spec, "0", g)
        errs.append(np.nanmax(np.abs(fd - p.ratio.values)) / g.dx**2)
    poly = generator_drift_polynomial("-x**3", "0", 3, 1.0, 0.2, GridSpace.segment(-4, 4, 801))
    ok = max(errs) <= 10 and poly.bound_holds() and math.isfinite(poly.radius)
    assert report("AC7 generator drift (FD <= 10 dx^2; polynomial bound for |x|>=R)", ok,
                  f"FD error / dx^2 = {', '.join(f'{e:.2f}' for e in errs)}; "
                  f"polynomial R={poly.radius:g}, bound holds={poly.bound_holds()}")


def test_ac08_uniform_in_dt():
    s = SCENARIOS["torus_em"]
    dts, T = [0.2, 0.1, 0.05, 0.025], 1.0
    t0 = time.perf_counter()
    rep = uniform_dt_study(s.config, s.grid, dts, T)
    mino = minorization_uniformity_check(s.config, s.grid, dts, T)
    elapsed = time.perf_counter() - t0
    ok = (s.grid.n_nodes == 256 and rep.bias_order >= 0.9 and rep.epsilon > 0
          and rep.kappa_spread <= 0.2 and mino.infimum > 0 and mino.spread <= 0.5 and elapsed <= 60)
    assert report("AC8 uniform in dt (order>=0.9, eps>0, kappa<=20%, alpha>0 & <=50%, <=60 s)", ok,
                  f"order={rep.bias_order:.3f} eps={rep.epsilon:.4f} kappa spread={rep.kappa_spread:.1%} "
                  f"alpha inf={mino.infimum:.2e} spread={mino.spread:.1%} {elapsed:.1f}s")


def test_ac09_particles():
    s, K, _, sol, _ = solved("ou_harmonic")
    seeds = range(30)
    k = 200
    mu0 = GridMeasure.delta(s.grid, s.start)
    s_k = float(scgf_growth(K, mu0, k)[-1])
    x2_star = float(sol.mu_star.masses @ s.grid.nodes**2)
    t0 = time.perf_counter()
    runs = {n: replicate(s.config, s.start, n, k, seeds, ["x**2"], space=s.grid)
            for n in (100, 1000, 10000)}
    elapsed = time.perf_counter() - t0
    big = runs[10000]
    z_growth = abs(big.growth.mean - s_k) / big.growth.standard_error
    z_late = abs(big.growth_after_burn_in.mean - sol.scgf) / big.growth_after_burn_in.standard_error
    z_x2 = abs(big.observables[0].mean - x2_star) / big.observables[0].standard_error
    mae = [runs[n].growth.mean_abs_error(s_k) for n in (100, 1000, 10000)]
    ok = z_growth <= 3 and z_late <= 3 and z_x2 <= 3 and mae[0] > mae[1] > mae[2] and elapsed <= 120
    assert report("AC9 particles N=1e4 k=200 30 seeds (within 3 SE; error decreasing in N; <=120 s)",
                  ok, f"growth {z_growth:.2f} SE from s_200, post-burn-in {z_late:.2f} SE from "
                      f"log Lambda, mu*(x^2) {z_x2:.2f} SE; mean |error| over N=1e2,1e3,1e4: "
                      f"{', '.join(f'{m:.1e}' for m in mae)}; {elapsed:.1f}s")


def test_ac10_normalization_covariance():
    worst = 0.0
    for name in ALL:
        _, K, _, sol, _ = solved(name)
        for s in (1e-3, 1.0, 1e3):
            ht = h_transform(K, sol.pair.rescaled(s))
            worst = max(worst,
                        np.max(np.abs(ht.Q_h.matrix - sol.htransform.Q_h.matrix)),
                        np.max(np.abs(ht.mu_h.masses - sol.htransform.mu_h.masses)),
                        np.max(np.abs(invariant_measure(ht).masses - sol.mu_star.masses)))
    assert report("AC10 normalization covariance s in {1e-3,1,1e3} (<=1e-12)", worst <= 1e-12,
                  f"max deviation {worst:.1e} over {len(ALL)} scenarios")


def test_ac11_determinism(tmp_path):
    configs = {
        "scgf": '[scenario]\npreset = "dmc_harmonic"\n[study]\nkind = "scgf"\nstarts = [0.5, 2.0]\n',
        "converge": '[scenario]\npreset = "torus_em"\n[study]\nkind = "converge"\nstarts = [1.0]\n',
        "particles": ('[scenario]\npreset = "ou_harmonic"\n[study]\nkind = "particles"\n'
                      'n_particles = 500\nk = 50\nn_seeds = 4\nseed = 7\n'),
    }
    same, n_files = True, 0
    for name, text in configs.items():
        cfg = tmp_path / f"{name}.toml"
        cfg.write_text(textwrap.dedent(text))
        for run in ("a", "b"):
            main(["run", str(cfg), "--out", str(tmp_path / run / name)])
        for f in sorted((tmp_path / "a" / name).glob("*.csv")):
            n_files += 1
            same &= f.read_bytes() == (tmp_path / "b" / name / f.name).read_bytes()
    assert report("AC11 determinism (byte-identical CSV across two runs)", same and n_files >= 4,
                  f"{n_files} CSV files compared")


if __name__ == "__main__":
    raise SystemExit(pytest.main([__file__, "-v", "-s"]))
