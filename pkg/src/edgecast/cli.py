"""Command-line entry point: ``edgecast <subcommand> ...``."""

from __future__ import annotations

import argparse
import configparser
import sys
import time
import warnings
from dataclasses import fields, replace
from pathlib import Path

import numpy as np

from .bandwidth import exact_average_bandwidth, saa_objective
from .cccp_admm import SolverConfig, solve_cccp_admm
from .experiments import (
    SOLVERS,
    ExperimentPlan,
    SymmetricRanges,
    _exact_allowed,
    load_plan,
    run_plan,
    run_solver,
    solver_config_from_section,
    symmetric_ranges,
    symmetric_report,
    write_manifest,
    write_plot_script,
)
from .heuristics import GreedyTrace, greedy_caching_computing_policy, greedy_caching_policy
from .instance import instance_from_config, is_feasible, mec_policy, validate_instance
from .sampling import draw_samples, save_samples

# flag name -> (config section, config key)
INSTANCE_FLAGS = {
    "tau": ("system", "tau"),
    "mu": ("system", "mu"),
    "alpha": ("tasks", "alpha"),
    "compute_load": ("tasks", "compute_load"),
    "cache_fraction": ("devices", "cache_fraction"),
    "cache_bits": ("devices", "cache_bits"),
    "avg_energy": ("devices", "avg_energy"),
    "cpu_freq": ("devices", "cpu_freq"),
    "inv_spectral_eff": ("devices", "inv_spectral_eff"),
}
_CACHE_KEYS = {"cache_fraction", "cache_bits"}


def _read_config(path) -> configparser.ConfigParser:
    cfg = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        cfg.read_file(fh)
    return cfg


def merge_flags(cfg: configparser.ConfigParser, args, mapping) -> list[str]:
    """Fill config keys from flags that were given; keys already in the file win.

    Returns the warning messages for every ignored flag.
    """
    msgs = []
    for flag, (section, key) in mapping.items():
        value = getattr(args, flag, None)
        if value is None:
            continue
        if not cfg.has_section(section):
            cfg.add_section(section)
        present = key in cfg[section] or (key in _CACHE_KEYS and any(k in cfg[section] for k in _CACHE_KEYS))
        if present:
            msgs.append(f"--{flag.replace('_', '-')} ignored: the config file sets [{section}] already")
            continue
        cfg[section][key] = str(value)
    return msgs


def _solver_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("solver (cccp_admm); [solver] keys in the config file win")
    for f in fields(SolverConfig):
        kind = {"polish": str, "aux_scale": str}.get(f.name)
        if kind is None:
            kind = int if f.name in ("max_outer", "max_inner", "balance_every", "max_gamma_changes") else float
        g.add_argument(f"--{f.name.replace('_', '-')}", dest=f"solver_{f.name}", type=kind, default=None)


def _solver_config(cfg, args) -> tuple[SolverConfig, list[str]]:
    mapping = {f"solver_{f.name}": ("solver", f.name) for f in fields(SolverConfig)}
    msgs = merge_flags(cfg, args, mapping)
    return (solver_config_from_section(cfg["solver"]) if cfg.has_section("solver") else SolverConfig()), msgs


def _instance_flags(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("instance overrides; keys in the config file win")
    for flag in INSTANCE_FLAGS:
        g.add_argument(f"--{flag.replace('_', '-')}", dest=flag, default=None)


def _load(args):
    cfg = _read_config(args.config)
    msgs = merge_flags(cfg, args, INSTANCE_FLAGS)
    return cfg, instance_from_config(cfg), msgs


def _warn(msgs) -> None:
    for m in msgs:
        print(f"warning: {m}", file=sys.stderr)


def _sampling_flags(p: argparse.ArgumentParser, default_n: int = 200) -> None:
    p.add_argument("--samples", type=int, default=default_n, help="number of sampled request vectors")
    p.add_argument("--seed", type=int, default=0)


# ---------------------------------------------------------------------------
# Subcommands
# ---------------------------------------------------------------------------


def cmd_validate(args) -> int:
    cfg = _read_config(args.config)
    if cfg.has_section("plan"):
        problems = load_plan(args.config).validate()
    elif cfg.has_section("symmetric"):
        names = {f.name.lower(): f.name for f in fields(SymmetricRanges)}
        problems = symmetric_ranges({names.get(k, k): v for k, v in cfg["symmetric"].items()}).validate()
    else:
        problems = validate_instance(instance_from_config(cfg))
    for p in problems:
        print(p)
    if not problems:
        print("ok")
    return 1 if problems else 0


def cmd_solve(args) -> int:
    cfg, inst, msgs = _load(args)
    scfg, more = _solver_config(cfg, args)
    _warn(msgs + more)
    A = draw_samples(inst, args.samples, args.seed)
    t0 = time.perf_counter()
    if args.solver == "cccp_admm":
        with warnings.catch_warnings(record=True) as caught:
            warnings.simplefilter("always", RuntimeWarning)
            res = solve_cccp_admm(inst, A, scfg)
        _warn(str(w.message) for w in caught)
        policy = res.policy
        if args.diagnostics:
            res.write_diagnostics(args.diagnostics)
    elif args.solver in ("greedy_cache", "greedy_cache_compute") and args.explain:
        trace = GreedyTrace()
        build = greedy_caching_policy if args.solver == "greedy_cache" else greedy_caching_computing_policy
        policy = build(inst, trace)
        trace.write_csv(args.explain)
    else:
        policy, _ = run_solver(args.solver, inst, A, scfg)
    elapsed = time.perf_counter() - t0
    value = saa_objective(inst, policy, A)
    mec = saa_objective(inst, mec_policy(inst.K, inst.F), A)
    print(f"policy {policy.encode()}")
    print(f"saa_bandwidth_hz {value!r}")
    if _exact_allowed(inst):
        print(f"exact_bandwidth_hz {exact_average_bandwidth(inst, policy)!r}")
    print(f"reduction_vs_mec {1 - value / mec:.6f}")
    print(f"feasible {is_feasible(inst, policy).ok}")
    outputs = []
    if args.output:
        routes = policy.routes()
        with open(args.output, "w") as fh:
            fh.write("device_id,task_id,route\n")
            for k in range(inst.K):
                for f in range(inst.F):
                    fh.write(f"{k},{f},{routes[k, f] + 1}\n")
        outputs.append(args.output)
    if args.diagnostics and args.solver == "cccp_admm":
        outputs.append(args.diagnostics)
    if args.manifest:
        write_manifest(args.manifest, command="solve", seed=args.seed, samples=args.samples,
                       timings={args.solver: elapsed}, outputs=outputs)
    return 0


def cmd_compare(args) -> int:
    cfg, inst, msgs = _load(args)
    scfg, more = _solver_config(cfg, args)
    _warn(msgs + more)
    plan = ExperimentPlan(inst, tuple(s.strip() for s in args.solvers.split(",")), samples=args.samples,
                          seed=args.seed, solver_config=scfg, output=args.output)
    return _run(plan, args, "compare")


def cmd_sweep(args) -> int:
    plan = load_plan(args.plan)
    if args.output:
        plan = replace(plan, output=Path(args.output))
    if args.workers:
        plan = replace(plan, workers=args.workers)
    return _run(plan, args, "sweep")


def _run(plan: ExperimentPlan, args, command: str) -> int:
    problems = plan.validate()
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 1
    res = run_plan(plan)
    if plan.output is None:
        sys.stdout.write(res.text)
    outputs = [plan.output] if plan.output else []
    if getattr(args, "plot_script", None) and plan.output:
        write_plot_script(plan.output, args.plot_script, "sweep")
        outputs.append(args.plot_script)
    if args.manifest:
        timings = {"total": res.total_seconds, "points": res.timings}
        write_manifest(args.manifest, command=command, seed=plan.seed, samples=plan.samples, timings=timings, outputs=outputs)
    return 0


def cmd_symmetric(args) -> int:
    values = {}
    if args.config:
        cfg = _read_config(args.config)
        if cfg.has_section("symmetric"):
            # configparser lowercases keys; map them back to field names
            names = {f.name.lower(): f.name for f in fields(SymmetricRanges)}
            values = {names.get(k, k): v for k, v in cfg["symmetric"].items()}
    msgs = []
    for f in fields(SymmetricRanges):
        flag = getattr(args, f"sym_{f.name}", None)
        if flag is None:
            continue
        if f.name in values:
            msgs.append(f"--{f.name.replace('_', '-')} ignored: the config file sets it already")
        else:
            values[f.name] = flag
    _warn(msgs)
    ranges = symmetric_ranges(values)
    problems = ranges.validate()
    if problems:
        for p in problems:
            print(p, file=sys.stderr)
        return 1
    t0 = time.perf_counter()
    text = symmetric_report(ranges, args.output)
    elapsed = time.perf_counter() - t0
    if args.output is None:
        sys.stdout.write(text)
    outputs = [args.output] if args.output else []
    if args.plot_script and args.output:
        write_plot_script(args.output, args.plot_script, "symmetric", x=args.plot_x, series=args.plot_series)
        outputs.append(args.plot_script)
    if args.manifest:
        write_manifest(args.manifest, command="symmetric", seed=ranges.seed, samples=ranges.mc_samples,
                       timings={"total": elapsed}, outputs=outputs)
    return 0


def cmd_dump_samples(args) -> int:
    _, inst, msgs = _load(args)
    _warn(msgs)
    A = draw_samples(inst, args.samples, args.seed)
    if args.output:
        save_samples(args.output, A)
    else:
        np.savetxt(sys.stdout, A, fmt="%d", delimiter=",")
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="edgecast", description=__doc__)
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("validate", help="check an instance or plan config")
    p.add_argument("config")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("solve", help="solve one instance with one solver")
    p.add_argument("config")
    p.add_argument("--solver", choices=SOLVERS, default="cccp_admm")
    _sampling_flags(p)
    p.add_argument("--output", help="CSV of routes per (device, task)")
    p.add_argument("--diagnostics", help="CSV of CCCP iterations (cccp_admm only)")
    p.add_argument("--explain", help="CSV trace of greedy decisions (greedy solvers only)")
    p.add_argument("--manifest")
    _instance_flags(p)
    _solver_flags(p)
    p.set_defaults(func=cmd_solve)

    p = sub.add_parser("compare", help="run several solvers on one instance")
    p.add_argument("config")
    p.add_argument("--solvers", default="cccp_admm,greedy_cache_compute,greedy_cache,mec")
    _sampling_flags(p)
    p.add_argument("--output")
    p.add_argument("--plot-script", dest="plot_script")
    p.add_argument("--manifest")
    _instance_flags(p)
    _solver_flags(p)
    p.set_defaults(func=cmd_compare)

    p = sub.add_parser("sweep", help="run a plan file")
    p.add_argument("plan")
    p.add_argument("--workers", type=int)
    p.add_argument("--output")
    p.add_argument("--plot-script", dest="plot_script")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("symmetric", help="closed-form symmetric-case gains")
    p.add_argument("--config", help="INI file with a [symmetric] section")
    for f in fields(SymmetricRanges):
        p.add_argument(f"--{f.name.replace('_', '-')}", dest=f"sym_{f.name}", default=None,
                       help="comma-separated list" if f.name in ("K", "beta_c", "beta_e", "f1", "energy") else None)
    p.add_argument("--output")
    p.add_argument("--plot-script", dest="plot_script")
    p.add_argument("--plot-x", dest="plot_x", default="beta_c")
    p.add_argument("--plot-series", dest="plot_series", help="column that separates curves, e.g. energy_j")
    p.add_argument("--manifest")
    p.set_defaults(func=cmd_symmetric)

    p = sub.add_parser("dump-samples", help="write sampled request vectors")
    p.add_argument("config")
    _sampling_flags(p)
    p.add_argument("--output")
    _instance_flags(p)
    p.set_defaults(func=cmd_dump_samples)
    return ap


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ValueError, KeyError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
