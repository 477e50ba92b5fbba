"""How long the output-based observer needs on the reference scenario.

    python scripts/horizon_study.py [--seeds 0 1 2 3 4] [--t-final 160] [--dt 1e-3]

For each seed, reports the first time after which every agent's output error
stays below the threshold, together with the slowest eigenvalues of the
converged error matrix that set this time scale.
"""
import argparse
from dataclasses import replace

import numpy as np

from distobs.engine import integrate, reference_scenario, verify_salpha_hurwitz
from distobs.graphnet import build_network_matrices
from distobs.leader import canonical_lift


def settling_time(tr, name, tol):
    worst = tr.series[name].max(axis=1)
    above = np.nonzero(worst >= tol)[0]
    if above.size == 0:
        return 0.0
    if above[-1] == worst.size - 1:
        return np.inf
    return float(tr.times[above[-1] + 1])


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seeds", type=int, nargs="+", default=[0, 1, 2, 3, 4])
    ap.add_argument("--t-final", type=float, default=160.0)
    ap.add_argument("--dt", type=float, default=1e-3)
    ap.add_argument("--tol", type=float, default=1e-3)
    args = ap.parse_args()

    scn = reference_scenario(dt=args.dt, t_final=args.t_final)
    rep = verify_salpha_hurwitz(canonical_lift(scn.leader), build_network_matrices(scn.graph).H, scn.gains.mu_zeta)
    slow = rep.spectrum[np.argsort(-rep.spectrum.real)[:4]]
    print("slowest error modes: " + ", ".join(f"{z.real:.4f}{z.imag:+.4f}j" for z in slow))
    print(f"e-folding time {-1 / rep.abscissa:.1f} s")
    for seed in args.seeds:
        tr = integrate(scn.with_(init=replace(scn.init, seed=seed)))
        at20 = tr.series["err_y"][np.searchsorted(tr.times, 20.0)].max()
        print(f"seed {seed}: max |y~| at t=20 {at20:.2e}; "
              + ", ".join(f"{n} < {args.tol:g} from t = {settling_time(tr, n, args.tol):.1f}"
                          for n in ("err_y", "err_zeta")))


if __name__ == "__main__":
    main()
