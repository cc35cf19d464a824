"""
Command-line front end for the surface simulator.

Global flags: --config PATH (flat key-value file), --set key=value
(repeatable override), --echo-config (print the effective configuration).
Subcommands: validate-pr, complexity, solve-one, sweep-power,
sweep-elements, oracle-check. Exit codes: 0 success, 1 runtime failure or
infeasibility, 2 configuration or parse errors. Results go to stdout,
diagnostics to stderr.
"""

from __future__ import annotations

import argparse
import os
import sys
from fractions import Fraction

import numpy as np

from .channel import draw_realization
from .config import (ConfigError, SimConfig, apply_overrides, bcd_settings_from,
                     echo_config, geometry_from, link_budget_from, load_config,
                     ris_spec_from)
from .experiments import (SweepSpec, emit_csv, emit_plot_script,
                          run_element_sweep, run_power_sweep)
from .noma import NomaAllocation
from .optimizer import (InfeasibleAllocationError, ProblemSpec, bcd_solve,
                        brute_force_oracle, solve_phase_subproblem)
from .surfaces import (DimensionError, PhaseResponse, RisSpec,
                       hardware_complexity, validate)

# sweep grids mirroring the reported curves
POWER_SWEEP_DBM = (0.0, 5.0, 10.0, 15.0, 20.0)
ELEMENT_SWEEP_COUNTS = (10, 20, 40, 80)

ORACLE_TWO_USER_INSTANCES = 50
ORACLE_SINGLE_USER_INSTANCES = 50
ORACLE_TWO_USER_MIN_RATIO = 0.98
ORACLE_SINGLE_USER_MIN_RATIO = 0.99


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="bdris",
        description="Beyond-diagonal surface simulator for a LEO downlink with two NOMA users.")
    parser.add_argument("--config", metavar="PATH", help="key = value configuration file")
    parser.add_argument("--set", metavar="KEY=VALUE", action="append", default=[],
                        dest="overrides", help="override one config key (repeatable)")
    parser.add_argument("--echo-config", action="store_true",
                        help="print the effective configuration to stdout")
    sub = parser.add_subparsers(dest="command")

    p = sub.add_parser("validate-pr", help="check a phase-response file for feasibility")
    p.add_argument("file", help=".npz with key 'phi' (or 'phi_r'/'phi_t' for hybrid, "
                                "'phi_s' stacked for multi-sector)")

    sub.add_parser("complexity", help="print the impedance-component count")
    sub.add_parser("solve-one", help="solve one realization with both schemes")

    for name in ("sweep-power", "sweep-elements"):
        p = sub.add_parser(name, help=f"run the {name.split('-')[1]} sweep and write CSVs")
        p.add_argument("--workers", type=int, default=1,
                       help="process count for sweep points (default 1)")

    sub.add_parser("oracle-check", help="run the small-instance brute-force agreement suite")
    return parser


def _require_reflective(cfg: SimConfig):
    if cfg.mode != "reflective":
        raise ConfigError("key 'mode': rate optimization supports reflective surfaces "
                          f"only, got '{cfg.mode}'")


def _load_phase_response(path: str, spec: RisSpec) -> PhaseResponse:
    try:
        data = np.load(path)
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read phase-response file {path}: {exc}") from None
    try:
        if spec.mode in ("reflective", "transmissive"):
            if "phi" not in data:
                raise ConfigError(f"{path}: missing array 'phi'")
            ctor = (PhaseResponse.reflective if spec.mode == "reflective"
                    else PhaseResponse.transmissive)
            return ctor(data["phi"])
        if spec.mode == "hybrid":
            for key in ("phi_r", "phi_t"):
                if key not in data:
                    raise ConfigError(f"{path}: missing array '{key}'")
            return PhaseResponse.hybrid(data["phi_r"], data["phi_t"])
        if "phi_s" not in data:
            raise ConfigError(f"{path}: missing array 'phi_s'")
        stacked = data["phi_s"]
        if stacked.ndim != 3:
            raise ConfigError(f"{path}: 'phi_s' must be a stack of square matrices")
        return PhaseResponse.multisector(list(stacked))
    finally:
        data.close()


def _cmd_validate_pr(cfg: SimConfig, path: str) -> int:
    spec = ris_spec_from(cfg)
    pr = _load_phase_response(path, spec)
    try:
        report = validate(pr, spec)
    except DimensionError as exc:
        raise ConfigError(f"{path}: {exc}") from None
    print(f"feasible: {'yes' if report.is_feasible else 'no'}")
    print(f"max_violation: {report.max_violation:.6e}")
    print(f"violated_constraint: {report.violated_constraint}")
    return 0 if report.is_feasible else 1


def _cmd_complexity(cfg: SimConfig) -> int:
    count = hardware_complexity(ris_spec_from(cfg))
    if isinstance(count, Fraction):
        print(f"{count} (non-integral component count)")
    else:
        print(count)
    return 0


def _cmd_solve_one(cfg: SimConfig) -> int:
    _require_reflective(cfg)
    spec = ris_spec_from(cfg)
    settings = bcd_settings_from(cfg)
    rng = np.random.default_rng([cfg.base_seed, 0, 0])
    ch = draw_realization(geometry_from(cfg), link_budget_from(cfg), cfg.num_elements,
                          num_users=2, include_direct=cfg.include_direct, rng=rng)
    cd_solution = None
    code = 0
    for scheme in ("CD_RIS", "BD_RIS"):
        problem = ProblemSpec(spec, cfg.power_dbm, cfg.min_rate_near,
                              cfg.min_rate_far, scheme)
        try:
            warm = cd_solution.phase if (scheme == "BD_RIS" and cd_solution) else None
            solution = bcd_solve(ch, problem, settings, warm_start_pr=warm)
        except InfeasibleAllocationError as exc:
            print(f"scheme={scheme} infeasible: {exc}", file=sys.stderr)
            code = 1
            continue
        if scheme == "CD_RIS":
            cd_solution = solution
        r, a = solution.rates, solution.allocation
        print(f"scheme={scheme} rate_near={r.rate_near:.6e} rate_far={r.rate_far:.6e} "
              f"sum_rate={r.sum_rate:.6e} alpha_near={a.alpha_near:.6f} "
              f"alpha_far={a.alpha_far:.6f} outer_iters={len(solution.trace)} "
              f"converged={'true' if solution.converged else 'false'}")
    return code


def _sweep_spec_from(cfg: SimConfig) -> SweepSpec:
    return SweepSpec(
        geometry=geometry_from(cfg),
        link_budget=link_budget_from(cfg),
        ris_spec=ris_spec_from(cfg),
        power_points_dbm=POWER_SWEEP_DBM,
        element_counts=ELEMENT_SWEEP_COUNTS,
        power_dbm=cfg.power_dbm,
        trials=cfg.trials,
        base_seed=cfg.base_seed,
        include_direct=cfg.include_direct,
        min_rate_near=cfg.min_rate_near,
        min_rate_far=cfg.min_rate_far,
        settings=bcd_settings_from(cfg),
    )


def _cmd_sweep(cfg: SimConfig, kind: str, workers: int) -> int:
    _require_reflective(cfg)
    sweep = _sweep_spec_from(cfg)
    if kind == "power":
        result = run_power_sweep(sweep, workers=workers)
        stem = "power_sweep"
    else:
        result = run_element_sweep(sweep, workers=workers)
        stem = "element_sweep"
    os.makedirs(cfg.out_dir, exist_ok=True)
    detail_path, agg_path = emit_csv(result, os.path.join(cfg.out_dir, stem + ".csv"))
    script_path = emit_plot_script(result, os.path.join(cfg.out_dir, stem + ".gp"),
                                   os.path.basename(agg_path))
    print(f"wrote {detail_path} ({len(result.detail_rows)} rows)")
    print(f"wrote {agg_path} ({len(result.aggregate_rows)} rows)")
    print(f"wrote {script_path}")
    return 0


def _cmd_oracle_check(cfg: SimConfig) -> int:
    """Solver-vs-oracle agreement on instances small enough to enumerate."""
    _require_reflective(cfg)
    geometry = geometry_from(cfg)
    link_budget = link_budget_from(cfg)
    settings = bcd_settings_from(cfg)
    ok = True

    # two-user K=2 diagonal instances against the phase/split grid
    worst = np.inf
    spec2 = RisSpec(2, "single", "reflective")
    problem2 = ProblemSpec(spec2, cfg.power_dbm, 0.0, 0.0, "BD_RIS")
    for i in range(ORACLE_TWO_USER_INSTANCES):
        rng = np.random.default_rng([cfg.base_seed, 101, i])
        ch = draw_realization(geometry, link_budget, 2, num_users=2,
                              include_direct=(i % 2 == 1), rng=rng)
        solved = bcd_solve(ch, problem2, settings)
        reference = brute_force_oracle(ch, problem2, grid=64)
        worst = min(worst, solved.rates.sum_rate / reference.rates.sum_rate)
    passed = worst >= ORACLE_TWO_USER_MIN_RATIO
    ok &= passed
    print(f"two-user K=2 grid agreement: worst ratio {worst:.6f} "
          f"(threshold {ORACLE_TWO_USER_MIN_RATIO}) {'PASS' if passed else 'FAIL'}")

    # single-user fully-connected instances against the analytic gain bound
    worst = np.inf
    k = 8
    spec_full = RisSpec(k, "full", "reflective")
    problem_full = ProblemSpec(spec_full, cfg.power_dbm, 0.0, 0.0, "BD_RIS")
    alloc = NomaAllocation(problem_full.power_mw, 0.0, 1.0)
    for i in range(ORACLE_SINGLE_USER_INSTANCES):
        rng = np.random.default_rng([cfg.base_seed, 202, i])
        ch = draw_realization(geometry, link_budget, k, num_users=1,
                              include_direct=(i % 2 == 1), rng=rng)
        pr = solve_phase_subproblem(ch, alloc, problem_full, settings)
        gain = abs(ch.h_direct[0] + ch.g_ris_user[0].conj() @ (pr.phi @ ch.h_sat_ris))
        bound = abs(ch.h_direct[0]) + (np.linalg.norm(ch.g_ris_user[0])
                                       * np.linalg.norm(ch.h_sat_ris))
        worst = min(worst, gain / bound)
    passed = worst >= ORACLE_SINGLE_USER_MIN_RATIO
    ok &= passed
    print(f"single-user gain bound: worst ratio {worst:.6f} "
          f"(threshold {ORACLE_SINGLE_USER_MIN_RATIO}) {'PASS' if passed else 'FAIL'}")
    return 0 if ok else 1


def main(argv=None) -> int:
    parser = _build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        cfg = load_config(args.config)
        cfg = apply_overrides(cfg, args.overrides)
        if args.echo_config:
            sys.stdout.write(echo_config(cfg))
        if args.command is None:
            if args.echo_config:
                return 0
            parser.print_usage(sys.stderr)
            print("error: a subcommand is required", file=sys.stderr)
            return 2
        if args.command == "validate-pr":
            return _cmd_validate_pr(cfg, args.file)
        if args.command == "complexity":
            return _cmd_complexity(cfg)
        if args.command == "solve-one":
            return _cmd_solve_one(cfg)
        if args.command == "sweep-power":
            return _cmd_sweep(cfg, "power", args.workers)
        if args.command == "sweep-elements":
            return _cmd_sweep(cfg, "elements", args.workers)
        return _cmd_oracle_check(cfg)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except InfeasibleAllocationError as exc:
        print(f"infeasible: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


def main_entry():
    raise SystemExit(main())
