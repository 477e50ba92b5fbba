"""Reference run of the output-based observer, with an optional error plot.

    python scripts/run_reference.py [--seed 0] [--t-final 20] [--dt 1e-4] [--plot errors.png]

Prints terminal errors and the fitted decay rate of the coefficient error.
Plotting needs matplotlib (``pip install .[plot]``).
"""
import argparse

import numpy as np

from distobs.engine import estimate_rate, integrate, reference_scenario
from distobs.graphnet import build_network_matrices

LABELS = {"err_alpha": r"$\|\tilde\alpha_i\|$", "err_P": r"$\|\tilde P_i\|$",
          "err_zeta": r"$\|\tilde\zeta_i\|$", "err_y": r"$\|\tilde y_i\|$"}


def plot(tr, path):
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig, axes = plt.subplots(2, 2, figsize=(9, 6), sharex=True)
    step = max(1, tr.times.size // 4000)
    for ax, (name, label) in zip(axes.ravel(), LABELS.items()):
        s = tr.series[name][::step]
        for i in range(tr.n_agents):
            ax.semilogy(tr.times[::step], np.maximum(s[:, i], 1e-16), lw=0.9, label=f"agent {i + 1}")
        ax.set_ylabel(label)
        ax.grid(True, which="both", alpha=0.3)
    for ax in axes[-1]:
        ax.set_xlabel("t [s]")
    axes[0, 0].legend(fontsize=8)
    fig.tight_layout()
    fig.savefig(path, dpi=130)
    print(f"wrote {path}")


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--t-final", type=float, default=20.0)
    ap.add_argument("--dt", type=float, default=1e-4)
    ap.add_argument("--plot", metavar="PNG")
    args = ap.parse_args()

    scn = reference_scenario(seed=args.seed, dt=args.dt, t_final=args.t_final)
    tr = integrate(scn)
    for name, v in tr.terminal().items():
        print(f"{name:>10}: " + "  ".join(f"{x:.3e}" for x in v))
    est = estimate_rate(tr.stacked("err_alpha"), tr.times)
    dH = build_network_matrices(scn.graph).delta_H
    print(f"alpha error rate {est.rate:.4f} (mu_alpha delta_H = {scn.gains.mu_alpha * dH:.4f}), R^2 {est.r2:.5f}")
    print(f"Riccati solves per agent {tr.riccati_solve_counts.tolist()}, wall {tr.wall_time:.1f} s")
    if args.plot:
        plot(tr, args.plot)


if __name__ == "__main__":
    main()
