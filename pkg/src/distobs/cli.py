"""Command line front end: ``distobs simulate | compare | analyze``.

Exit codes: 0 success, 1 numerical failure, 2 configuration error,
3 assumption violation (no leader-rooted spanning tree), 4 divergence.
"""

import argparse
import json
import logging
import os
import sys

import numpy as np

from .config import ScenarioConfig, load_config
from .engine import SERIES, estimate_rate, simulate, stability_step_limit, verify_salpha_hurwitz
from .errors import AssumptionError, ConfigError, DivergenceError, NumericalError
from .graphnet import build_network_matrices, has_spanning_tree
from .leader import canonical_lift, format_polynomial, polynomial_residual
from .numerics import real_part_bounds
from .observers import OUTPUT_BASED, STATE_BASED, check_gain_conditions, observer_costs
from .riccati import CareProblem, care_residual, solve_care

EXIT_OK, EXIT_NUMERICAL, EXIT_CONFIG, EXIT_ASSUMPTION, EXIT_DIVERGENCE = 0, 1, 2, 3, 4
#: terminal output error below which a run counts as converged in reports
CONVERGED_TOL = 1e-3
PREFIX = {STATE_BASED: "sb_", OUTPUT_BASED: "ob_"}

log = logging.getLogger("distobs")


def _apply_overrides(cfg, args):
    for attr, flag in (("seed", "seed"), ("dt", "dt"), ("t_final", "t_final")):
        val = getattr(args, flag, None)
        if val is not None:
            setattr(cfg, attr, val)
    cfg._check_dimensions({})
    return cfg


def csv_columns(kinds, n_agents):
    """Header of ``trace.csv``; column prefixes appear only when both kinds are written."""
    cols = ["t"]
    for kind in kinds:
        pre = PREFIX[kind] if len(kinds) > 1 else ""
        for i in range(1, n_agents + 1):
            cols += [f"{pre}{name}_{i}" for name in SERIES[kind]]
    return cols


def write_trace_csv(path, traces, stride=1):
    kinds = list(traces)
    first = traces[kinds[0]]
    N = first.n_agents
    rows = np.arange(0, first.times.size, stride)
    if rows[-1] != first.times.size - 1:
        rows = np.append(rows, first.times.size - 1)
    blocks = [first.times[rows, None]]
    for kind in kinds:
        tr = traces[kind]
        names = SERIES[kind]
        stacked = np.stack([tr.series[name][rows] for name in names], axis=2)  # rows, N, series
        blocks.append(stacked.reshape(rows.size, N * len(names)))
    data = np.hstack(blocks)
    np.savetxt(path, data, delimiter=",", header=",".join(csv_columns(kinds, N)), comments="", fmt="%.10e")


def _fit(tr, name):
    try:
        est = estimate_rate(tr.stacked(name), tr.times)
    except ValueError:
        return None
    return {"rate": est.rate, "r2": est.r2, "window": list(est.window)}


def trace_summary(tr):
    terminal = tr.terminal()
    return {
        "terminal": {k: v.tolist() for k, v in terminal.items()},
        "max_terminal": {k: float(v.max()) for k, v in terminal.items()},
        "rates": {name: _fit(tr, name) for name in SERIES[tr.kind]},
        "riccati_solve_counts": tr.riccati_solve_counts.tolist(),
        "wall_time": tr.wall_time,
        "warnings": list(tr.warnings),
        "converged": bool(terminal["err_y"].max() < CONVERGED_TOL),
    }


def _network_facts(scn):
    net = build_network_matrices(scn.graph)
    return net, real_part_bounds(scn.leader.S0)[0]


def _write_json(path, obj):
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2)
        fh.write("\n")


def cmd_simulate(cfg, out_dir, stride=1):
    scn = cfg.to_scenario()
    if not has_spanning_tree(scn.graph):
        raise AssumptionError("communication graph has no spanning tree rooted at the leader")
    net, dbar = _network_facts(scn)
    report = check_gain_conditions(scn.gains, dbar, net.delta_H, kinds=scn.kinds())
    traces = simulate(scn)
    os.makedirs(out_dir, exist_ok=True)
    write_trace_csv(os.path.join(out_dir, "trace.csv"), traces, stride)
    warnings = [f"{c.name} = {c.value:g} does not exceed the sufficient bound {c.threshold:g}"
                for c in report.failed()]
    for tr in traces.values():
        warnings += [w for w in tr.warnings if w not in warnings]
    summary = {
        "observer_kind": scn.observer_kind,
        "delta_H": net.delta_H,
        "delta_bar_S0": dbar,
        "gain_conditions": report.to_dict(),
        "warnings": warnings,
        "traces": {kind: trace_summary(tr) for kind, tr in traces.items()},
        "scenario": cfg.to_dict(),
    }
    _write_json(os.path.join(out_dir, "summary.json"), summary)
    return summary


def render_table(report):
    """Plain-text version of the dimension / information-exchange comparison."""
    lines = [f"{'observer':<14}{'dimension':>11}{'exchange':>10}{'max |y~| @ T':>15}{'CARE solves':>13}{'wall [s]':>10}"]
    for kind in (STATE_BASED, OUTPUT_BASED):
        r = report[kind]
        lines.append(f"{kind:<14}{r['dimension']:>11d}{r['payload']:>10d}{r['max_terminal']['err_y']:>15.3e}"
                     f"{r['riccati_solves']:>13d}{r['wall_time']:>10.2f}")
    for kind in (STATE_BASED, OUTPUT_BASED):
        parts = ", ".join(f"{k} {v}" for k, v in report[kind]["breakdown"].items())
        lines.append(f"  {kind}: {parts}")
    return "\n".join(lines) + "\n"


def cmd_compare(cfg, out_dir, stride=None):
    cfg.kind = "both"
    scn = cfg.to_scenario()
    if not has_spanning_tree(scn.graph):
        raise AssumptionError("communication graph has no spanning tree rooted at the leader")
    lift = canonical_lift(scn.leader)
    traces = simulate(scn)
    report = {}
    for kind, tr in traces.items():
        costs = observer_costs(kind, q=scn.leader.q, p=scn.leader.p, n=lift.n)
        summ = trace_summary(tr)
        report[kind] = {
            "dimension": costs.dimension,
            "payload": costs.payload,
            "breakdown": costs.breakdown,
            "max_terminal": summ["max_terminal"],
            "converged": summ["converged"],
            "riccati_solves": int(tr.riccati_solve_counts.sum()),
            "wall_time": tr.wall_time,
        }
    os.makedirs(out_dir, exist_ok=True)
    _write_json(os.path.join(out_dir, "compare.json"), report)
    table = render_table(report)
    with open(os.path.join(out_dir, "compare.txt"), "w", encoding="utf-8") as fh:
        fh.write(table)
    if stride:
        write_trace_csv(os.path.join(out_dir, "trace.csv"), traces, stride)
    return report, table


def cmd_analyze(cfg):
    """Static checks: minimal polynomial, graph margin, gain bounds, ``S_alpha`` spectrum."""
    scn = cfg.to_scenario()
    lift = canonical_lift(scn.leader)
    dbar = real_part_bounds(scn.leader.S0)[0]
    sol0 = solve_care(CareProblem(lift.S_script0, lift.C_script0))
    out = {
        "minimal_polynomial": {
            "degree": lift.n,
            "alpha0": lift.alpha0.tolist(),
            "text": format_polynomial(lift.alpha0),
            "residual": polynomial_residual(scn.leader.S0, lift.alpha0),
        },
        "delta_bar_S0": dbar,
        "care_residual_P0": care_residual(sol0.P, lift.S_script0, lift.C_script0),
        "care_closed_loop_abscissa": sol0.closed_loop_max_re,
        "costs": {kind: observer_costs(kind, q=scn.leader.q, p=scn.leader.p, n=lift.n).__dict__
                  for kind in (STATE_BASED, OUTPUT_BASED)},
    }
    tree = has_spanning_tree(scn.graph)
    net = build_network_matrices(scn.graph)
    out["spanning_tree"] = tree
    out["delta_H"] = net.delta_H
    if tree:
        out["gain_conditions"] = check_gain_conditions(scn.gains, dbar, net.delta_H, kinds=scn.kinds()).to_dict()
        out["S_alpha"] = verify_salpha_hurwitz(lift, net.H, scn.gains.mu_zeta).to_dict()
        out["rk4_dt_limit"] = stability_step_limit(scn, lift)
    else:
        out["gain_conditions"] = None
        out["S_alpha"] = None
    return out


def build_parser():
    parser = argparse.ArgumentParser(prog="distobs", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p, out=True):
        p.add_argument("--config", required=True, metavar="PATH")
        if out:
            p.add_argument("--out-dir", required=True, metavar="PATH")
        p.add_argument("--seed", type=int, help="overrides sim.seed")
        p.add_argument("--dt", type=float, help="overrides sim.dt")
        p.add_argument("--t-final", type=float, dest="t_final", help="overrides sim.t_final")
        return p

    p = common(sub.add_parser("simulate", help="integrate one scenario, write trace.csv and summary.json"))
    p.add_argument("--stride", type=int, default=1, help="write every k-th sample to trace.csv")
    p = common(sub.add_parser("compare", help="run both observers, write compare.json and compare.txt"))
    p.add_argument("--stride", type=int, default=None, help="also write trace.csv with this stride")
    p = common(sub.add_parser("analyze", help="static analysis without time integration"), out=False)
    p.add_argument("--out-dir", metavar="PATH", help="also write analysis.json here")
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if getattr(args, "stride", None) is not None and args.stride < 1:
            raise ConfigError("--stride must be >= 1")
        if args.command == "simulate":
            summary = cmd_simulate(cfg, args.out_dir, args.stride)
            for kind, s in summary["traces"].items():
                print(f"{kind}: max terminal |y~| = {s['max_terminal']['err_y']:.3e}")
            for w in summary["warnings"]:
                print(f"warning: {w}", file=sys.stderr)
        elif args.command == "compare":
            _, table = cmd_compare(cfg, args.out_dir, args.stride)
            print(table, end="")
        else:
            out = cmd_analyze(cfg)
            if args.out_dir:
                os.makedirs(args.out_dir, exist_ok=True)
                _write_json(os.path.join(args.out_dir, "analysis.json"), out)
            print(json.dumps(out, indent=2))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except AssumptionError as exc:
        print(f"assumption violated: {exc}", file=sys.stderr)
        return EXIT_ASSUMPTION
    except DivergenceError as exc:
        print(f"divergence: {exc}", file=sys.stderr)
        return EXIT_DIVERGENCE
    except NumericalError as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
