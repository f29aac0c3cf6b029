"""Table of per-step quantities across time steps for a torus scenario."""
import argparse

from fk_ergo.discretization import minorization_uniformity_check, uniform_dt_study
from fk_ergo.scenario import get_scenario


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--scenario", default="torus_em")
    ap.add_argument("--dt", type=float, nargs="+", default=[0.2, 0.1, 0.05, 0.025])
    ap.add_argument("--T", type=float, default=1.0)
    args = ap.parse_args()
    s = get_scenario(args.scenario)
    rep = uniform_dt_study(s.config, s.grid, args.dt, args.T)
    mino = minorization_uniformity_check(s.config, s.grid, args.dt, args.T)
    print(f"{'dt':>7} {'lambda_dt':>12} {'|bias|':>10} {'h_min':>8} {'h_max':>8} {'kappa':>8} {'alpha':>9}")
    for i, dt in enumerate(rep.dt_values):
        print(f"{dt:7.4f} {rep.lambda_dt[i]:12.8f} {rep.bias[i]:10.3e} {rep.h_min[i]:8.4f} "
              f"{rep.h_max[i]:8.4f} {rep.kappa_dt[i]:8.4f} {mino.alpha_dt[i]:9.3e}")
    print(f"lambda_ref={rep.lambda_ref:.10f} order={rep.bias_order:.3f} eps={rep.epsilon:.4f} "
          f"kappa spread={rep.kappa_spread:.1%} alpha spread={mino.spread:.1%}")


if __name__ == "__main__":
    main()
