"""Parameter sweeps, symmetric-case reports and run manifests.

Sweep CSVs start with one ``#`` comment line naming the schema version and
contain no timing data, so a re-run with the same plan and seed reproduces the
file byte for byte whatever the number of workers.  Timings go to the JSON
manifest instead.
"""

from __future__ import annotations

import configparser
import csv
import hashlib
import io
import itertools
import json
import platform
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, fields
from pathlib import Path

import numpy as np

from . import __version__
from .bandwidth import EXACT_STATE_CAP, exact_average_bandwidth, saa_objective, unicast_bandwidth
from .cccp_admm import SolverConfig, solve_cccp_admm
from .heuristics import alpha_le1_greedy, greedy_caching_computing_policy, greedy_caching_policy, mec_computing_policy
from .instance import DeviceSpec, Instance, ServicePolicy, is_feasible, load_instance, mec_policy, resource_usage, validate_instance
from .oracle import SEARCH_CAP, device_assignments, enumerate_optimal
from .sampling import draw_samples
from .symmetric import SymmetricInstance, gain_vs_mec, gain_vs_unicast, symmetric_policy, analyze, optimal_counts

SWEEP_SCHEMA = "edgecast-sweep/1"
SYMMETRIC_SCHEMA = "edgecast-symmetric/1"
SOLVERS = ("oracle", "cccp_admm", "greedy_cache", "greedy_cache_compute", "mec", "alpha_le1_greedy")
SWEEP_VARS = ("cache_fraction", "f1", "K", "beta_c", "beta_e")
SWEEP_COLUMNS = [
    "sweep", "value", "solver", "saa_bandwidth_hz", "exact_bandwidth_hz", "mec_bandwidth_hz",
    "reduction_vs_mec", "feasible", "max_cache_use", "max_energy_use", "diagnostics", "policy",
]


# ---------------------------------------------------------------------------
# Sweep variables
# ---------------------------------------------------------------------------


def with_device_count(instance: Instance, K: int) -> Instance:
    """Instance with K devices copying device 0, with inverse spectral efficiency s_0 * (k + 1)."""
    if K < 1:
        raise ValueError("K must be at least 1")
    d0 = instance.devices[0]
    devices = tuple(
        DeviceSpec(d0.cache_bits, d0.avg_energy, d0.cpu_freq, d0.inv_spectral_eff * (k + 1), d0.demand) for k in range(K)
    )
    return Instance(instance.catalog, devices, instance.params)


def apply_sweep(instance: Instance, var: str | None, value: float) -> Instance:
    """Instance at one sweep point.

    cache_fraction  every C_k = value * sum_f I_f
    f1              every f_k = value
    K               ``with_device_count``
    beta_c          every C_k = value * sum_f O_f  (C / (F O) in the symmetric case)
    beta_e          E_k = value * mu * mean_f(I_f w_f) * f_k^2
    """
    if var is None:
        return instance
    if var == "cache_fraction":
        return instance.replace(cache_bits=np.full(instance.K, value * instance.I.sum()))
    if var == "f1":
        return instance.replace(cpu_freq=np.full(instance.K, float(value)))
    if var == "K":
        if float(value) != int(value):
            raise ValueError(f"K must be an integer, got {value}")
        return with_device_count(instance, int(value))
    if var == "beta_c":
        return instance.replace(cache_bits=np.full(instance.K, value * instance.O.sum()))
    if var == "beta_e":
        unit = instance.mu * float(np.mean(instance.I * instance.w))
        return instance.replace(avg_energy=value * unit * instance.fk**2)
    raise ValueError(f"unknown sweep variable {var!r}; expected one of {SWEEP_VARS}")


# ---------------------------------------------------------------------------
# Plans
# ---------------------------------------------------------------------------


@dataclass
class ExperimentPlan:
    instance: Instance
    solvers: tuple[str, ...] = ("cccp_admm", "greedy_cache_compute", "greedy_cache", "mec")
    sweep: str | None = None
    values: tuple[float, ...] = (float("nan"),)
    samples: int = 200
    seed: int = 0
    workers: int = 1
    exact: bool = True  # add the exact expectation when the request space is small enough
    solver_config: SolverConfig = field(default_factory=SolverConfig)
    output: Path | None = None
    fixed: tuple[tuple[str, float], ...] = ()  # sweep variables pinned before sweeping

    def base_instance(self) -> Instance:
        inst = self.instance
        for var, value in self.fixed:
            inst = apply_sweep(inst, var, value)
        return inst

    def point(self, index: int) -> Instance:
        return apply_sweep(self.base_instance(), self.sweep, self.values[index])

    def validate(self) -> list[str]:
        errs = []
        unknown = [s for s in self.solvers if s not in SOLVERS]
        if unknown:
            errs.append(f"unknown solvers {unknown}; choose from {SOLVERS}")
        if not self.solvers:
            errs.append("no solvers")
        if self.sweep is not None and self.sweep not in SWEEP_VARS:
            errs.append(f"unknown sweep variable {self.sweep!r}")
        if not self.values:
            errs.append("empty sweep range")
        if self.samples < 1:
            errs.append("samples must be at least 1")
        if self.workers < 1:
            errs.append("workers must be at least 1")
        errs += [f"unknown fixed variable {var!r}" for var, _ in self.fixed if var not in SWEEP_VARS]
        if errs:
            return errs
        for i, v in enumerate(self.values):
            try:
                inst = self.point(i)
            except ValueError as exc:
                errs.append(str(exc))
                continue
            errs += [f"{self.sweep}={v}: {p}" for p in validate_instance(inst)]
            if "alpha_le1_greedy" in self.solvers and inst.alpha > 1:
                errs.append("alpha_le1_greedy needs alpha <= 1")
            if "oracle" in self.solvers:
                try:
                    sizes = [len(device_assignments(inst, k)) for k in range(inst.K)]
                except ValueError as exc:
                    errs.append(f"{self.sweep}={v}: oracle: {exc}")
                    continue
                if int(np.prod(sizes, dtype=object)) > SEARCH_CAP:
                    errs.append(f"{self.sweep}={v}: oracle search exceeds the cap {SEARCH_CAP}")
        return errs


def _csv_list(text: str) -> list[str]:
    return [t.strip() for t in text.replace("\n", ",").split(",") if t.strip()]


def solver_config_from_section(section) -> SolverConfig:
    kwargs = {}
    for f in fields(SolverConfig):
        if f.name not in section:
            continue
        raw = section[f.name]
        if f.name in ("aux_scale",):
            kwargs[f.name] = raw.strip()
        elif f.name == "polish":
            kwargs[f.name] = section.getboolean(f.name)
        elif f.name in ("max_outer", "max_inner", "balance_every", "max_gamma_changes"):
            kwargs[f.name] = int(raw)
        elif f.name == "gamma":
            kwargs[f.name] = None if raw.strip().lower() in ("auto", "none", "") else float(raw)
        else:
            kwargs[f.name] = float(raw)
    return SolverConfig(**kwargs)


def load_plan(path) -> ExperimentPlan:
    """Read a plan file.

    [plan]
    instance = base_instance.ini   ; relative to the plan file
    solvers = cccp_admm, greedy_cache_compute, greedy_cache, mec
    sweep = cache_fraction
    values = 0.05, 0.1, 0.15
    samples = 200
    seed = 0
    workers = 1
    exact = auto                   ; auto | no
    output = cache_sweep.csv

    [fixed]                        ; optional, applied before the sweep
    cache_fraction = 0.3

    [solver]                       ; optional SolverConfig fields
    admm_tol = 1e-5
    """
    path = Path(path)
    cfg = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        cfg.read_file(fh)
    p = cfg["plan"]
    inst = load_instance(path.parent / p["instance"])
    sweep = p.get("sweep", "").strip() or None
    values = tuple(float(v) for v in _csv_list(p.get("values", ""))) if sweep else (float("nan"),)
    out = p.get("output", "").strip()
    return ExperimentPlan(
        instance=inst,
        solvers=tuple(_csv_list(p.get("solvers", ",".join(ExperimentPlan.solvers)))),
        sweep=sweep,
        values=values,
        samples=p.getint("samples", 200),
        seed=p.getint("seed", 0),
        workers=p.getint("workers", 1),
        exact=p.get("exact", "auto").strip().lower() != "no",
        solver_config=solver_config_from_section(cfg["solver"]) if "solver" in cfg else SolverConfig(),
        output=(path.parent / out) if out else None,
        fixed=tuple(("K" if k == "k" else k, float(v)) for k, v in cfg["fixed"].items()) if "fixed" in cfg else (),
    )


# ---------------------------------------------------------------------------
# Running
# ---------------------------------------------------------------------------


def run_solver(name: str, instance: Instance, samples, config: SolverConfig | None = None) -> tuple[ServicePolicy, str]:
    """Policy from one named solver plus a short ``key=value;...`` diagnostics string."""
    if name == "mec":
        return mec_computing_policy(instance), ""
    if name == "greedy_cache":
        return greedy_caching_policy(instance), ""
    if name == "greedy_cache_compute":
        return greedy_caching_computing_policy(instance), ""
    if name == "alpha_le1_greedy":
        return alpha_le1_greedy(instance, samples), ""
    if name == "oracle":
        res = enumerate_optimal(instance, samples)
        return res.best_policy, f"examined={res.policies_examined}"
    if name == "cccp_admm":
        with warnings.catch_warnings():
            warnings.simplefilter("ignore", RuntimeWarning)
            res = solve_cccp_admm(instance, samples, config)
        inner = sum(r.inner_iter for r in res.trace)
        diag = (
            f"outer={len(res.trace) - 1};inner={inner};binary_gap={res.rounding['binary_gap']:.6g};"
            f"demoted={len(res.rounding['demoted'])};polish={res.rounding['polish_moves']};"
            f"mec_fallback={int(res.rounding['fell_back_to_mec'])};capped={int(res.warning is not None)}"
        )
        return res.policy, diag
    raise ValueError(f"unknown solver {name!r}")


def _num(v) -> str:
    return repr(float(v))


def _exact_allowed(instance: Instance) -> bool:
    return instance.F**instance.K <= EXACT_STATE_CAP


def run_point(plan: ExperimentPlan, index: int) -> tuple[list[list[str]], dict]:
    value = plan.values[index]
    inst = plan.point(index)
    A = draw_samples(inst, plan.samples, plan.seed)
    mec = saa_objective(inst, mec_policy(inst.K, inst.F), A)
    exact = plan.exact and _exact_allowed(inst)
    rows, timings = [], {}
    for name in plan.solvers:
        t0 = time.perf_counter()
        policy, diag = run_solver(name, inst, A, plan.solver_config)
        timings[name] = time.perf_counter() - t0
        saa = saa_objective(inst, policy, A)
        cache, energy = resource_usage(inst, policy.x)
        use_c = np.divide(cache, inst.C, out=np.zeros_like(cache), where=inst.C > 0)
        use_e = np.divide(energy, inst.E, out=np.zeros_like(energy), where=inst.E > 0)
        rows.append([
            plan.sweep or "", "" if plan.sweep is None else _num(value), name, _num(saa),
            _num(exact_average_bandwidth(inst, policy)) if exact else "", _num(mec),
            _num(1.0 - saa / mec) if mec > 0 else "", str(int(is_feasible(inst, policy).ok)),
            _num(use_c.max()), _num(use_e.max()), diag, policy.encode(),
        ])
    return rows, timings


def format_rows(rows: list[list[str]], schema: str, columns: list[str]) -> str:
    buf = io.StringIO()
    buf.write(f"# {schema}\n")
    wr = csv.writer(buf, lineterminator="\n")
    wr.writerow(columns)
    wr.writerows(rows)
    return buf.getvalue()


@dataclass
class PlanResult:
    text: str
    rows: list[list[str]]
    timings: list[dict]
    total_seconds: float

    def records(self) -> list[dict]:
        return [dict(zip(SWEEP_COLUMNS, r)) for r in self.rows]


def run_plan(plan: ExperimentPlan, workers: int | None = None) -> PlanResult:
    """Run every (sweep point, solver) pair; rows come out in plan order."""
    errs = plan.validate()
    if errs:
        raise ValueError("invalid plan: " + "; ".join(errs))
    n = workers or plan.workers
    t0 = time.perf_counter()
    with ThreadPoolExecutor(max_workers=n) as pool:
        results = list(pool.map(lambda i: run_point(plan, i), range(len(plan.values))))
    rows = [r for point_rows, _ in results for r in point_rows]
    text = format_rows(rows, SWEEP_SCHEMA, SWEEP_COLUMNS)
    if plan.output is not None:
        Path(plan.output).write_text(text)
    return PlanResult(text, rows, [t for _, t in results], time.perf_counter() - t0)


# ---------------------------------------------------------------------------
# Symmetric reports
# ---------------------------------------------------------------------------


@dataclass
class SymmetricRanges:
    F: int = 50
    K: tuple[int, ...] = (10,)
    I: float = 15e6
    w: float = 10.0
    alpha: float = 2.0
    beta_c: tuple[float, ...] = (0.1, 0.2, 0.3)
    beta_e: tuple[float, ...] = (0.3,)
    f1: tuple[float, ...] = (1.1e11,)
    mu: float = 1e-27
    tau: float = 0.005
    s: float = 0.2
    mc_samples: int = 0  # Monte-Carlo validation with the floored closed-form policy
    seed: int = 0
    energy: tuple[float, ...] = ()  # absolute energy budgets (J); replaces beta_e when given

    def validate(self) -> list[str]:
        errs = []
        if not (self.K and self.beta_c and self.beta_e and self.f1):
            errs.append("every swept range must be nonempty")
        if self.mc_samples < 0:
            errs.append("mc_samples must be nonnegative")
        if not errs:
            try:
                for _ in self.points():
                    pass
            except ValueError as exc:
                errs.append(str(exc))
        return errs

    def points(self):
        if self.energy:
            for K, bc, E, f1 in itertools.product(self.K, self.beta_c, self.energy, self.f1):
                C = bc * self.F * self.alpha * self.I
                yield SymmetricInstance(self.F, K, self.I, self.w, self.alpha, C, E, f1, self.mu, self.tau, self.s)
            return
        for K, bc, be, f1 in itertools.product(self.K, self.beta_c, self.beta_e, self.f1):
            yield SymmetricInstance.from_betas(self.F, K, self.I, self.w, self.alpha, bc, be, f1, self.mu, self.tau, self.s)


_RANGE_KEYS = ("K", "beta_c", "beta_e", "f1", "energy")


def symmetric_ranges(mapping: dict) -> SymmetricRanges:
    """SymmetricRanges from string values (config section or flags); list fields take comma-separated values."""
    kwargs = {}
    for f in fields(SymmetricRanges):
        raw = mapping.get(f.name)
        if raw is None:
            continue
        if f.name in _RANGE_KEYS:
            vals = tuple(float(t) for t in str(raw).replace(";", ",").split(",") if t.strip())
            kwargs[f.name] = tuple(int(v) for v in vals) if f.name == "K" else vals
        elif f.name in ("F", "mc_samples", "seed"):
            kwargs[f.name] = int(raw)
        else:
            kwargs[f.name] = float(raw)
    return SymmetricRanges(**kwargs)


SYMMETRIC_COLUMNS = [
    "alpha", "beta_c", "beta_e", "energy_j", "f1", "regime", "ratio_mec", "ratio_unicast",
    "K", "F", "n1", "n2", "n3", "n4", "b_star_hz", "b_mec_hz", "mc_ratio_mec", "mc_ratio_unicast",
]


def monte_carlo_ratios(sym: SymmetricInstance, samples: int, seed: int) -> tuple[float, float]:
    """(multicast / MEC, multicast / unicast) for the floored closed-form policy on sampled requests."""
    inst = sym.to_instance()
    policy = symmetric_policy(sym, optimal_counts(sym, integer=True))
    A = draw_samples(inst, samples, seed)
    b = saa_objective(inst, policy, A)
    mec = saa_objective(inst, mec_policy(inst.K, inst.F), A)
    uni = unicast_bandwidth(inst, policy)
    return b / mec, (b / uni if uni > 0 else float("nan"))


def symmetric_report(ranges: SymmetricRanges, output=None) -> str:
    rows = []
    for sym in ranges.points():
        an = analyze(sym)
        ratio, label = gain_vs_mec(sym)
        mc = monte_carlo_ratios(sym, ranges.mc_samples, ranges.seed) if ranges.mc_samples > 0 else None
        rows.append([
            _num(sym.alpha), _num(sym.beta_c), _num(sym.beta_e), _num(sym.E), _num(sym.f1), label, _num(ratio),
            _num(gain_vs_unicast(sym.F, sym.K)), str(sym.K), str(sym.F),
            *(_num(v) for v in an.counts.as_tuple()), _num(an.B_star), _num(an.B_mec),
            _num(mc[0]) if mc else "", _num(mc[1]) if mc else "",
        ])
    text = format_rows(rows, SYMMETRIC_SCHEMA, SYMMETRIC_COLUMNS)
    if output is not None:
        Path(output).write_text(text)
    return text


# ---------------------------------------------------------------------------
# Manifests and plot scripts
# ---------------------------------------------------------------------------


def write_manifest(path, *, command: str, seed: int | None, samples: int | None, timings, outputs) -> dict:
    manifest = {
        "schema": "edgecast-manifest/1",
        "command": command,
        "seed": seed,
        "samples": samples,
        "versions": {
            "edgecast": __version__,
            "python": platform.python_version(),
            "numpy": np.__version__,
        },
        "timings_s": timings,
        "outputs": {str(p): hashlib.sha256(Path(p).read_bytes()).hexdigest() for p in outputs},
    }
    Path(path).write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return manifest


_SWEEP_PLOT = '''"""Plot a sweep CSV (generated by edgecast)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
with open(path) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
curves = {{}}
for r in rows:
    curves.setdefault(r["solver"], []).append((float(r["value"]), float(r["saa_bandwidth_hz"])))
for name, pts in curves.items():
    xs, ys = zip(*sorted(pts))
    plt.plot(xs, [y / 1e6 for y in ys], marker="o", label=name)
plt.xlabel(rows[0]["sweep"])
plt.ylabel("average bandwidth (MHz)")
plt.legend()
plt.grid(True, alpha=0.3)
plt.savefig({png!r}, dpi=150, bbox_inches="tight")
'''

_SYMMETRIC_PLOT = '''"""Plot a symmetric-case CSV (generated by edgecast)."""
import csv
import sys

import matplotlib.pyplot as plt

path = sys.argv[1] if len(sys.argv) > 1 else {csv!r}
x = sys.argv[2] if len(sys.argv) > 2 else {x!r}
with open(path) as fh:
    rows = list(csv.DictReader(line for line in fh if not line.startswith("#")))
series = {series!r}
groups = {{}}
for r in rows:
    groups.setdefault(r[series] if series else "", []).append(r)
for name, members in groups.items():
    pts = sorted((float(r[x]), float(r["ratio_mec"]), float(r["ratio_unicast"])) for r in members)
    tag = f" ({{series}}={{name}})" if series else ""
    plt.plot([p[0] for p in pts], [p[1] for p in pts], marker="o", label="optimal / MEC computing" + tag)
    plt.plot([p[0] for p in pts], [p[2] for p in pts], marker="s", linestyle="--", label="multicast / unicast" + tag)
plt.xlabel(x)
plt.ylabel("bandwidth ratio")
plt.legend()
plt.grid(True, alpha=0.3)
plt.savefig({png!r}, dpi=150, bbox_inches="tight")
'''


def write_plot_script(csv_path, script_path, kind: str = "sweep", x: str = "beta_c", series: str | None = None) -> None:
    """Write a standalone matplotlib script for a result CSV; ``series`` splits symmetric rows into curves."""
    png = str(Path(csv_path).with_suffix(".png"))
    if kind == "sweep":
        text = _SWEEP_PLOT.format(csv=str(csv_path), png=png)
    elif kind == "symmetric":
        text = _SYMMETRIC_PLOT.format(csv=str(csv_path), png=png, x=x, series=series)
    else:
        raise ValueError(f"unknown plot kind {kind!r}")
    Path(script_path).write_text(text)
