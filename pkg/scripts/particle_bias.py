"""Particle estimates of the growth rate against the grid, over ensemble sizes."""
import argparse

import numpy as np

from fk_ergo.particles import replicate
from fk_ergo.scenario import get_scenario
from fk_ergo.semigroup import CONVERGENCE_TOL
from fk_ergo.spectral import scgf_growth, solve
from fk_ergo.state_space import GridMeasure


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="ou_harmonic")
    ap.add_argument("--sizes", type=int, nargs="+", default=[100, 1000, 10000])
    ap.add_argument("--k", type=int, default=200)
    ap.add_argument("--seeds", type=int, default=30)
    args = ap.parse_args()
    s = get_scenario(args.scenario)
    K = s.config.kernel(s.grid)
    sol = solve(K, s.config.lyapunov_function(s.grid), tol=CONVERGENCE_TOL)
    s_k = float(scgf_growth(K, GridMeasure.delta(s.grid, s.start), args.k)[-1]) / s.config.scale
    lam = sol.scgf / s.config.scale
    print(f"grid s_k={s_k:.6f}  log Lambda={lam:.6f}")
    print(f"{'N':>7} {'mean':>10} {'SE':>9} {'MAE vs s_k':>11} {'burn-in MAE':>12}")
    for n in args.sizes:
        run = replicate(s.config, s.start, n, args.k, range(args.seeds), space=s.grid)
        print(f"{n:7d} {run.growth.mean:10.6f} {run.growth.standard_error:9.2e} "
              f"{run.growth.mean_abs_error(s_k):11.2e} {run.growth_after_burn_in.mean_abs_error(lam):12.2e}")


if __name__ == "__main__":
    np.seterr(all="raise")
    main()
