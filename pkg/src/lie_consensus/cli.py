"""Command-line front end.

Subcommands: ``simulate`` (trajectory CSV + summary JSON), ``analyze``
(equilibrium/spectrum report for a state file), ``sweep`` (one run per
parameter value, merged in parameter order) and ``verify`` (the invariant
suites).  Report paths render matplotlib figures next to the delimited
output unless ``--no-plot`` is given.

Exit codes: 0 converged/pass, 1 not converged or checks failed,
2 numerical failure, 3 configuration error.
"""

from __future__ import annotations

import argparse
import concurrent.futures
import csv
import json
import os
import sys

import numpy as np

from . import analysis, config as cfgmod, integrate, verify
from .dynamics import FlowMode, SwarmState, consensus_terms
from .errors import ConfigError, NonFiniteState

EXIT_OK = 0
EXIT_NOT_CONVERGED = 1
EXIT_NUMERICAL = 2
EXIT_CONFIG = 3


def _write_json(path, payload) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _final_residual(state: SwarmState, spec) -> float:
    if spec.mode == FlowMode.SYNC:
        return max((r.norm() for r in analysis.sync_residual(state, spec)), default=0.0)
    return max((t.norm() for t in consensus_terms(state, spec)), default=0.0)


def _run_scenario(cfg: cfgmod.ScenarioConfig, seed: int):
    spec = cfgmod.resolve_spec(cfg)
    init = cfgmod.build_initial_state(cfg, np.random.default_rng(seed))
    traj = integrate.simulate(
        init,
        spec,
        h=cfg.h,
        t_end=cfg.t_end,
        method=cfg.integrator,
        sample_every=cfg.sample_every,
        tol_c=cfg.tol_c,
        tol_v=cfg.tol_v,
        window=cfg.window,
    )
    return spec, traj


def cmd_simulate(args) -> int:
    cfg = cfgmod.load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    spec, traj = _run_scenario(cfg, args.seed)
    final = traj.final_state()
    report = analysis.classify_equilibrium(final, spec)
    csv_path = os.path.join(args.out, "trajectory.csv")
    integrate.write_trajectory_csv(traj, csv_path, include_log_coords=args.log_coords)
    summary = {
        "status": traj.status,
        "t_converged": traj.t_converged,
        "final_classification": report.kind.value,
        "final_V_T": float(traj.potential[-1]),
        "final_max_pair_value": float(traj.max_pair_value[-1]),
        "final_residual": _final_residual(final, spec),
        "samples": int(len(traj.times)),
        "final_state": cfgmod.state_to_dict(final),
        "config": cfgmod.config_to_dict(cfg),
        "seed": args.seed,
    }
    _write_json(os.path.join(args.out, "summary.json"), summary)
    if not args.no_plot:
        from . import plots

        plots.plot_trajectory(traj, os.path.join(args.out, "trajectory.png"))
    print(f"{traj.status}: V_T={summary['final_V_T']:.3e} "
          f"classification={report.kind.value} -> {csv_path}")
    return EXIT_OK if traj.converged else EXIT_NOT_CONVERGED


def cmd_analyze(args) -> int:
    cfg = cfgmod.load_config(args.config)
    os.makedirs(args.out, exist_ok=True)
    spec = cfgmod.resolve_spec(cfg)
    with open(args.state, "r", encoding="utf-8") as fh:
        data = json.load(fh)
    state = cfgmod.state_from_dict(cfg, data.get("final_state", data))
    report = analysis.classify_equilibrium(state, spec)
    block = analysis.block_jacobian_consensus(state, spec)
    payload = {
        "classification": report.as_dict(),
        "block_jacobian_spectrum": analysis.spectrum(block).as_dict(),
    }
    if spec.mode == FlowMode.SECOND_ORDER:
        payload["second_order_spectrum"] = analysis.spectrum(
            analysis.second_order_block(spec.k_p * block, spec.k_d)
        ).as_dict()
    else:
        flow_spec_report = analysis.spectrum(analysis.numerical_jacobian(state, spec))
        payload["flow_jacobian_spectrum"] = flow_spec_report.as_dict()
    if spec.mode == FlowMode.SYNC:
        residuals = analysis.sync_residual(state, spec)
        cond = analysis.check_necessary_condition(spec, state.natural_velocities)
        payload["sync"] = {
            "residual_norms": [r.norm() for r in residuals],
            "mean_velocity": [float(x) for x in
                              analysis.sync_mean_velocity(state.natural_velocities).coords],
            "necessary_condition": cond.as_dict(),
        }
    _write_json(os.path.join(args.out, "report.json"), payload)
    if not args.no_plot:
        from . import plots

        plots.plot_spectrum(
            analysis.spectrum(block).eigenvalues,
            os.path.join(args.out, "spectrum.png"),
            title="consensus block Jacobian",
        )
    print(f"classification={report.kind.value} residual={report.residual:.3e}")
    return EXIT_OK


def _sweep_one(payload):
    cfg_dict, parameter, value, seed = payload
    cfg = cfgmod.parse_config(cfg_dict)
    cfg = cfgmod.apply_parameter(cfg, parameter, value)
    try:
        spec, traj = _run_scenario(cfg, seed)
    except NonFiniteState:
        return {"value": value, "status": "non_finite", "t_converged": "", "final_residual": ""}
    residual = _final_residual(traj.final_state(), spec)
    return {
        "value": value,
        "status": traj.status,
        "t_converged": "" if traj.t_converged is None else repr(float(traj.t_converged)),
        "final_residual": repr(float(residual)),
    }


def cmd_sweep(args) -> int:
    cfg = cfgmod.load_config(args.config)
    if args.values:
        values = [float(v) for v in args.values.split(",") if v.strip()]
    else:
        if args.count < 1:
            raise ConfigError("sweep range must contain at least one value")
        values = list(np.linspace(args.start, args.stop, args.count))
    if not values:
        raise ConfigError("empty sweep range")
    cfgmod.apply_parameter(cfg, args.param, values[0])  # fail fast on bad parameter
    os.makedirs(args.out, exist_ok=True)

    jobs = [(cfgmod.config_to_dict(cfg), args.param, v, args.seed) for v in values]
    if args.workers > 1:
        with concurrent.futures.ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_one, jobs))
    else:
        rows = [_sweep_one(j) for j in jobs]

    csv_path = os.path.join(args.out, "sweep.csv")
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow([args.param, "status", "t_converged", "final_residual"])
        for row in rows:
            writer.writerow([repr(float(row["value"])), row["status"],
                             row["t_converged"], row["final_residual"]])
    if not args.no_plot:
        from . import plots

        plots.plot_sweep(
            [r["value"] for r in rows],
            [r["status"] for r in rows],
            [float(r["final_residual"]) if r["final_residual"] else float("nan") for r in rows],
            args.param,
            os.path.join(args.out, "sweep.png"),
        )
    print(f"{len(rows)} runs -> {csv_path}")
    return EXIT_OK


def cmd_verify(args) -> int:
    suites = verify.run_suites(args.suite, args.seed)
    all_ok = True
    for suite in suites:
        for check in suite.checks:
            mark = "pass" if check.passed else "FAIL"
            all_ok = all_ok and check.passed
            print(f"[{mark}] {suite.name}.{check.name}: measured={check.measured:.3e} "
                  f"tol={check.tolerance:.3e}" + (f" ({check.detail})" if check.detail else ""))
    if args.out:
        os.makedirs(args.out, exist_ok=True)
        _write_json(
            os.path.join(args.out, "verify.json"),
            {"seed": args.seed, "suites": [s.as_dict() for s in suites]},
        )
    print("all checks passed" if all_ok else "some checks FAILED")
    return EXIT_OK if all_ok else EXIT_NOT_CONVERGED


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="lie-consensus",
        description="Consensus and velocity synchronization flows on Lie groups",
    )
    sub = parser.add_subparsers(dest="command", required=True)

    sim = sub.add_parser("simulate", help="integrate a scenario and write CSV/JSON reports")
    sim.add_argument("--config", required=True)
    sim.add_argument("--seed", type=int, default=0)
    sim.add_argument("--out", default="out")
    sim.add_argument("--no-plot", action="store_true")
    sim.add_argument("--log-coords", action="store_true",
                     help="append per-agent log coordinates to the trajectory CSV")
    sim.set_defaults(func=cmd_simulate)

    ana = sub.add_parser("analyze", help="classify a state and report spectra")
    ana.add_argument("--config", required=True)
    ana.add_argument("--state", required=True,
                     help="state JSON (or a simulate summary.json)")
    ana.add_argument("--seed", type=int, default=0)
    ana.add_argument("--out", default="out")
    ana.add_argument("--no-plot", action="store_true")
    ana.set_defaults(func=cmd_analyze)

    swp = sub.add_parser("sweep", help="rerun a scenario over a parameter range")
    swp.add_argument("--config", required=True)
    swp.add_argument("--param", required=True, choices=cfgmod.SWEEP_PARAMETERS)
    swp.add_argument("--values", help="comma-separated explicit values")
    swp.add_argument("--start", type=float)
    swp.add_argument("--stop", type=float)
    swp.add_argument("--count", type=int, default=0)
    swp.add_argument("--seed", type=int, default=0)
    swp.add_argument("--out", default="out")
    swp.add_argument("--workers", type=int, default=1)
    swp.add_argument("--no-plot", action="store_true")
    swp.set_defaults(func=cmd_sweep)

    ver = sub.add_parser("verify", help="run the invariant suites")
    ver.add_argument("--suite", default="all",
                     choices=list(verify.SUITE_NAMES) + ["all"])
    ver.add_argument("--seed", type=int, default=0)
    ver.add_argument("--out", default=None)
    ver.set_defaults(func=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return args.func(args)
    except ConfigError as err:
        print(f"config error: {err}", file=sys.stderr)
        return EXIT_CONFIG
    except NonFiniteState as err:
        print(f"numerical failure: {err}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":
    sys.exit(main())
