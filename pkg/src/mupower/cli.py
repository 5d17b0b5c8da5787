"""Experiment harness.

Subcommands (all read a scenario file, see scenario.py for the format):

    solve            one centralized solve, report to stdout (+ CSV via --out)
    sweep-diversity  2-user (w1, w2) grid; CSV of powers, SE and EE per user
    sweep-fairness   2-user channel-asymmetry sweep; CSV of Jain index
    primal-dual      distributed run; trajectory CSV via --out, summary to stdout

CSV output uses 12 significant digits, comma delimiter, LF line endings,
and is deterministic for a fixed scenario file and seed. Exit codes:
0 success, 1 input error, 2 solver non-convergence (primal-dual only
fails this way under --strict).
"""
from __future__ import annotations

import argparse
import sys

import numpy as np

from .metrics import jain_index, summarize
from .primal_dual import integrate, write_trajectory_csv
from .scenario import LoadedScenario, load_scenario
from .solver import BudgetCase, ConvergenceError, Scenario, solve_centralized

_FAIRNESS_DELTA1_DB = (-20.0, 0.0, 20.0)


def _fmt(x: float) -> str:
    return f"{float(x):.12g}"


def _write_csv(path, header, rows):
    lines = [",".join(header)]
    lines += [",".join(_fmt(c) if not isinstance(c, str) else c for c in row) for row in rows]
    text = "\n".join(lines) + "\n"
    if path is None:
        sys.stdout.write(text)
    else:
        with open(path, "w", newline="") as f:
            f.write(text)


def _with_overrides(sc: Scenario, w=None, delta_db=None) -> Scenario:
    from .channel import gains_from_db

    return Scenario.from_arrays(
        w=sc.w if w is None else np.asarray(w, dtype=float),
        p_circuit=sc.p_circuit,
        p_max=sc.p_max,
        gains=sc.gains if delta_db is None else gains_from_db(delta_db),
        p_sum_max=sc.p_sum_max,
        settings=sc.settings,
    )


def cmd_solve(loaded: LoadedScenario, out=None) -> int:
    sc = loaded.scenario
    alloc = solve_centralized(sc)
    d = alloc.diagnostics
    report = summarize(sc, alloc)
    case = "SumTight" if alloc.case is BudgetCase.SUM_TIGHT else "SumSlack"
    print(f"case: {case}")
    print(f"lambda: {_fmt(alloc.lam)}")
    print(f"sum_p_watts: {_fmt(np.sum(alloc.p))} (budget {_fmt(sc.p_sum_max)})")
    print("user,P_watts,P_u_watts,SE,EE,U")
    for i in range(sc.n_users):
        print(
            f"{i + 1},{_fmt(alloc.p[i])},{_fmt(alloc.p_u[i])},"
            f"{_fmt(d.se[i])},{_fmt(d.ee[i])},{_fmt(d.utilities[i])}"
        )
    print(f"total_utility: {_fmt(d.total_utility)}")
    print(f"jain: {_fmt(report.jain)}")
    print(f"max_kkt_residual: {_fmt(d.kkt.max_residual)}")
    if out is not None:
        rows = [
            (str(i + 1), alloc.p[i], alloc.p_u[i], d.se[i], d.ee[i], d.utilities[i])
            for i in range(sc.n_users)
        ]
        _write_csv(out, ["user", "P_watts", "P_u_watts", "SE", "EE", "U"], rows)
    return 0


def cmd_sweep_diversity(loaded: LoadedScenario, out=None, grid: int = 41) -> int:
    """Solve over a (w1, w2) grid on [0, 1]^2 for a 2-user scenario."""
    sc = loaded.scenario
    if sc.n_users != 2:
        raise ValueError(f"sweep-diversity needs a 2-user scenario, got N={sc.n_users}")
    axis = np.linspace(0.0, 1.0, grid)
    rows = []
    floor = sc.settings.p_floor
    for w1 in axis:
        for w2 in axis:
            alloc = solve_centralized(_with_overrides(sc, w=(w1, w2)))
            d = alloc.diagnostics
            p = alloc.p
            if not (
                np.all(p >= floor)
                and np.all(p <= sc.p_max + 1e-12)
                and np.sum(p) <= sc.p_sum_max + 1e-9
            ):
                raise RuntimeError(f"infeasible sweep row at w=({w1}, {w2})")
            rows.append((w1, w2, p[0], p[1], d.se[0], d.se[1], d.ee[0], d.ee[1]))
    _write_csv(out, ["w1", "w2", "P1", "P2", "SE1", "SE2", "EE1", "EE2"], rows)
    return 0


def cmd_sweep_fairness(
    loaded: LoadedScenario,
    out=None,
    grid: int = 41,
    delta1_db_list=_FAIRNESS_DELTA1_DB,
    delta2_db_range=None,
) -> int:
    """Jain index across channel asymmetry for a 2-user scenario.

    delta1 steps through a few fixed levels while delta2 sweeps a range
    (defaults match -20/0/+20 dB levels against a 41-point [-20, 20] dB
    sweep).
    """
    sc = loaded.scenario
    if sc.n_users != 2:
        raise ValueError(f"sweep-fairness needs a 2-user scenario, got N={sc.n_users}")
    if delta2_db_range is None:
        delta2_db_range = np.linspace(-20.0, 20.0, grid)
    rows = []
    for d1 in delta1_db_list:
        for d2 in delta2_db_range:
            alloc = solve_centralized(_with_overrides(sc, delta_db=(d1, d2)))
            u = alloc.diagnostics.utilities
            jain = jain_index(u)
            if not (1.0 / sc.n_users - 1e-12 <= jain <= 1.0 + 1e-12):
                raise RuntimeError(f"jain {jain} out of range at delta=({d1}, {d2}) dB")
            rows.append((d1, d2, jain, u[0], u[1]))
    _write_csv(out, ["delta1_db", "delta2_db", "jain", "U1", "U2"], rows)
    return 0


def cmd_primal_dual(loaded: LoadedScenario, out=None, strict: bool = False) -> int:
    sc = loaded.scenario
    reference = solve_centralized(sc)
    traj = integrate(sc, loaded.pd, reference=reference)
    if out is not None:
        write_trajectory_csv(traj, out)
    gap = float(np.max(np.abs(traj.p_final - reference.p)))
    print(f"converged: {traj.converged}")
    print(f"steps: {traj.steps_taken}")
    print(f"final_gap_vs_centralized: {_fmt(gap)}")
    print(f"final_lambda: {_fmt(traj.lam_final)} (centralized {_fmt(reference.lam)})")
    print(f"messages_broadcast: {traj.messages_broadcast}")
    print(f"messages_uplink: {traj.messages_uplink}")
    if strict and not traj.converged:
        print("error: primal-dual integration did not converge", file=sys.stderr)
        return 2
    return 0


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="mupower",
        description="Utility-maximizing uplink MU-MIMO power allocation experiments",
    )
    sub = parser.add_subparsers(dest="command", required=True)
    for name, help_text in (
        ("solve", "centralized solve of one scenario"),
        ("sweep-diversity", "2-user (w1, w2) preference sweep"),
        ("sweep-fairness", "2-user channel-asymmetry fairness sweep"),
        ("primal-dual", "distributed primal-dual integration"),
    ):
        p = sub.add_parser(name, help=help_text)
        p.add_argument("--scenario", required=True, help="scenario YAML file")
        p.add_argument("--out", default=None, help="output CSV path (default: stdout)")
        p.add_argument("--grid", type=int, default=41, help="sweep points per axis")
        p.add_argument("--strict", action="store_true", help="nonzero exit on non-convergence")
        p.add_argument("--seed", type=int, default=None, help="override scenario RNG seed")
    args = parser.parse_args(argv)

    try:
        loaded = load_scenario(args.scenario)
        if args.seed is not None:
            loaded.seed = args.seed
        if args.command == "solve":
            return cmd_solve(loaded, out=args.out)
        if args.command == "sweep-diversity":
            return cmd_sweep_diversity(loaded, out=args.out, grid=args.grid)
        if args.command == "sweep-fairness":
            return cmd_sweep_fairness(loaded, out=args.out, grid=args.grid)
        return cmd_primal_dual(loaded, out=args.out, strict=args.strict)
    except ConvergenceError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except (OSError, ValueError, FloatingPointError, RuntimeError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
