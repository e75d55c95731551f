"""Problem instances, service policies and feasibility checks.

Routes are indexed 0..3 in arrays and named 1..4 in reports:

    route 1  local output cache hit       (cache O_f, no energy, no traffic)
    route 2  compute from cached input     (cache I_f, energy, no traffic)
    route 3  download input, compute       (energy, traffic R3)
    route 4  download output from the MEC  (traffic R4)

Tasks and devices are 0-based everywhere in the Python API and in files.
"""

from __future__ import annotations

import configparser
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Sequence

import numpy as np

ROUTES = 4

# Relative slack allowed on budget constraints; absorbs float rounding when a
# budget is constructed to be met exactly.
FEAS_RTOL = 1e-9

ALPHA_RTOL = 1e-9
DEMAND_ATOL = 1e-12


@dataclass(frozen=True)
class TaskSpec:
    input_bits: float
    compute_load: float
    output_bits: float


@dataclass(frozen=True)
class TaskCatalog:
    tasks: tuple[TaskSpec, ...]
    alpha: float

    @classmethod
    def from_inputs(cls, input_bits: Sequence[float], alpha: float, compute_load=10.0) -> "TaskCatalog":
        loads = np.broadcast_to(np.asarray(compute_load, dtype=float), (len(input_bits),))
        tasks = tuple(TaskSpec(float(i), float(w), float(alpha) * float(i)) for i, w in zip(input_bits, loads))
        return cls(tasks, float(alpha))

    def __len__(self) -> int:
        return len(self.tasks)


@dataclass(frozen=True)
class DeviceSpec:
    cache_bits: float
    avg_energy: float
    cpu_freq: float
    inv_spectral_eff: float
    demand: tuple[float, ...]

    @classmethod
    def from_channel(cls, cache_bits, avg_energy, cpu_freq, power, gain, noise_var, demand) -> "DeviceSpec":
        """Build a device from transmit power, channel gain and noise variance.

        The spectral efficiency uses log base 2 (bits/s/Hz).
        """
        s = 1.0 / math.log2(1.0 + power * gain**2 / noise_var)
        return cls(float(cache_bits), float(avg_energy), float(cpu_freq), s, tuple(float(p) for p in demand))


@dataclass(frozen=True)
class SystemParams:
    tau: float
    mu: float


@dataclass(frozen=True)
class Instance:
    catalog: TaskCatalog
    devices: tuple[DeviceSpec, ...]
    params: SystemParams

    @property
    def F(self) -> int:
        return len(self.catalog)

    @property
    def K(self) -> int:
        return len(self.devices)

    @property
    def alpha(self) -> float:
        return self.catalog.alpha

    @property
    def tau(self) -> float:
        return self.params.tau

    @property
    def mu(self) -> float:
        return self.params.mu

    # Array views used by every numerical routine.
    @cached_property
    def I(self) -> np.ndarray:
        return np.array([t.input_bits for t in self.catalog.tasks])

    @cached_property
    def w(self) -> np.ndarray:
        return np.array([t.compute_load for t in self.catalog.tasks])

    @cached_property
    def O(self) -> np.ndarray:
        return np.array([t.output_bits for t in self.catalog.tasks])

    @cached_property
    def C(self) -> np.ndarray:
        return np.array([d.cache_bits for d in self.devices])

    @cached_property
    def E(self) -> np.ndarray:
        return np.array([d.avg_energy for d in self.devices])

    @cached_property
    def fk(self) -> np.ndarray:
        return np.array([d.cpu_freq for d in self.devices])

    @cached_property
    def s(self) -> np.ndarray:
        return np.array([d.inv_spectral_eff for d in self.devices])

    @cached_property
    def P(self) -> np.ndarray:
        return np.array([d.demand for d in self.devices], dtype=float)

    @cached_property
    def compute_time(self) -> np.ndarray:
        """Local execution time I_f w_f / f_k, shape (K, F)."""
        return (self.I * self.w)[None, :] / self.fk[:, None]

    @cached_property
    def energy_cost(self) -> np.ndarray:
        """Average energy P_{k,f} mu f_k^2 I_f w_f of computing f on k, shape (K, F)."""
        return self.P * self.mu * (self.fk**2)[:, None] * (self.I * self.w)[None, :]

    @cached_property
    def cache_weight(self) -> np.ndarray:
        """Cache bits used per route, shape (F, 4)."""
        z = np.zeros(self.F)
        return np.stack([self.O, self.I, z, z], axis=1)

    @cached_property
    def energy_weight(self) -> np.ndarray:
        """Energy used per route, shape (K, F, 4)."""
        e = self.energy_cost
        z = np.zeros_like(e)
        return np.stack([z, e, e, z], axis=2)

    def replace(self, *, cache_bits=None, avg_energy=None, cpu_freq=None, tau=None) -> "Instance":
        """Copy with per-device budgets or frequencies overridden (scalars broadcast)."""
        K = self.K

        def per_device(value, current):
            if value is None:
                return current
            return np.broadcast_to(np.asarray(value, dtype=float), (K,))

        C = per_device(cache_bits, self.C)
        E = per_device(avg_energy, self.E)
        fk = per_device(cpu_freq, self.fk)
        devices = tuple(
            DeviceSpec(float(C[k]), float(E[k]), float(fk[k]), d.inv_spectral_eff, d.demand)
            for k, d in enumerate(self.devices)
        )
        params = self.params if tau is None else SystemParams(float(tau), self.mu)
        return Instance(self.catalog, devices, params)


def make_instance(
    input_bits,
    alpha: float,
    compute_load,
    cache_bits,
    avg_energy,
    cpu_freq,
    inv_spectral_eff,
    demand,
    tau: float,
    mu: float,
) -> Instance:
    """Assemble an instance from arrays; scalar device fields broadcast over devices."""
    s = np.atleast_1d(np.asarray(inv_spectral_eff, dtype=float))
    P = np.asarray(demand, dtype=float)
    K = len(s)
    if P.ndim == 1:
        P = np.broadcast_to(P, (K, P.shape[0]))
    C = np.broadcast_to(np.asarray(cache_bits, dtype=float), (K,))
    E = np.broadcast_to(np.asarray(avg_energy, dtype=float), (K,))
    fk = np.broadcast_to(np.asarray(cpu_freq, dtype=float), (K,))
    catalog = TaskCatalog.from_inputs(np.atleast_1d(input_bits), alpha, compute_load)
    devices = tuple(
        DeviceSpec(float(C[k]), float(E[k]), float(fk[k]), float(s[k]), tuple(float(p) for p in P[k]))
        for k in range(K)
    )
    return Instance(catalog, devices, SystemParams(float(tau), float(mu)))


def validate_instance(instance: Instance) -> list[str]:
    """Return the list of violated invariants; empty means the instance is valid.

    The first entry names the first invariant that failed.
    """
    problems: list[str] = []
    cat = instance.catalog
    if len(cat) < 1:
        problems.append("catalog is empty")
    if instance.K < 1:
        problems.append("no devices")
    if problems:
        return problems
    for f, t in enumerate(cat.tasks):
        if not (t.input_bits > 0 and t.compute_load > 0 and t.output_bits > 0):
            problems.append(f"task {f}: sizes and load must be positive")
        elif not math.isclose(t.output_bits / t.input_bits, cat.alpha, rel_tol=ALPHA_RTOL):
            problems.append(f"task {f}: output/input ratio differs from alpha={cat.alpha}")
    for k, d in enumerate(instance.devices):
        if d.cache_bits < 0 or d.avg_energy < 0:
            problems.append(f"device {k}: negative cache or energy budget")
        if not d.cpu_freq > 0:
            problems.append(f"device {k}: cpu frequency must be positive")
        if not d.inv_spectral_eff > 0:
            problems.append(f"device {k}: inverse spectral efficiency must be positive")
        p = np.asarray(d.demand, dtype=float)
        if p.shape != (len(cat),):
            problems.append(f"device {k}: demand has {p.size} entries, expected {len(cat)}")
        elif np.any(p < 0) or abs(p.sum() - 1.0) > DEMAND_ATOL:
            problems.append(f"device {k}: demand not normalized (sum={p.sum():.12g})")
    p = instance.params
    if not (p.tau > 0 and p.mu > 0):
        problems.append("deadline tau and energy coefficient mu must be positive")
    if problems:
        return problems
    late = instance.compute_time > p.tau
    if np.any(late):
        k, f = map(int, np.argwhere(late)[0])
        problems.append(f"deadline infeasible for local computing (task {f}, device {k})")
    return problems


@dataclass(frozen=True)
class ServicePolicy:
    """Route weights x[k, f, j]; rows sum to one."""

    x: np.ndarray
    mode: str = "binary"

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float)
        if x.ndim != 3 or x.shape[2] != ROUTES:
            raise ValueError(f"policy tensor must have shape (K, F, 4), got {x.shape}")
        if self.mode not in ("binary", "relaxed"):
            raise ValueError(f"unknown policy mode {self.mode!r}")
        if self.mode == "binary" and not np.all((x == 0) | (x == 1)):
            raise ValueError("binary policy has non 0/1 entries")
        x = x.copy()
        x.setflags(write=False)
        object.__setattr__(self, "x", x)

    @classmethod
    def from_routes(cls, routes) -> "ServicePolicy":
        """Binary policy from 0-based route indices of shape (K, F)."""
        r = np.asarray(routes, dtype=int)
        return cls(np.eye(ROUTES)[r], "binary")

    @classmethod
    def uniform_route(cls, K: int, F: int, route: int) -> "ServicePolicy":
        return cls.from_routes(np.full((K, F), route))

    def routes(self) -> np.ndarray:
        """0-based route index per (k, f); ties go to the lowest route."""
        return np.argmax(self.x, axis=2)

    @property
    def K(self) -> int:
        return self.x.shape[0]

    @property
    def F(self) -> int:
        return self.x.shape[1]

    def encode(self) -> str:
        """Compact string with one route digit (1..4) per (k, f), devices separated by '|'."""
        return "|".join("".join(str(r + 1) for r in row) for row in self.routes())

    @classmethod
    def decode(cls, text: str) -> "ServicePolicy":
        return cls.from_routes([[int(c) - 1 for c in row] for row in text.split("|")])


def mec_policy(K: int, F: int) -> ServicePolicy:
    return ServicePolicy.uniform_route(K, F, 3)


@dataclass(frozen=True)
class CachingComputingDecision:
    cache_input: np.ndarray
    cache_output: np.ndarray
    compute_local: np.ndarray


# Table-I rows: (c^O, c^I, d) for routes 1..4.
_TABLE_I = np.array([[1, 0, 0], [0, 1, 1], [0, 0, 1], [0, 0, 0]], dtype=int)


def policy_to_decision(policy: ServicePolicy) -> CachingComputingDecision:
    if policy.mode != "binary":
        raise ValueError("caching/computing decisions are defined for binary policies only")
    if not np.all(policy.x.sum(axis=2) == 1):
        raise ValueError("policy rows must sum to one")
    rows = _TABLE_I[policy.routes()]
    return CachingComputingDecision(cache_input=rows[..., 1], cache_output=rows[..., 0], compute_local=rows[..., 2])


def decision_to_policy(decision: CachingComputingDecision) -> ServicePolicy:
    cO = np.asarray(decision.cache_output, dtype=int)
    cI = np.asarray(decision.cache_input, dtype=int)
    d = np.asarray(decision.compute_local, dtype=int)
    if np.any((cO == 1) & (cI == 1)):
        raise ValueError("input and output of the same task cannot both be cached")
    routes = np.full(cO.shape, 3)
    routes[(cI == 0) & (d == 1)] = 2
    routes[(cI == 1) & (d == 1)] = 1
    routes[cO == 1] = 0
    if np.any((cO == 1) & (d == 1)) or np.any((cI == 1) & (d == 0)):
        raise ValueError("decision does not match any Table-I row")
    return ServicePolicy.from_routes(routes)


@dataclass(frozen=True)
class Violation:
    kind: str  # "row_sum", "box", "cache" or "energy"
    device: int
    slack: float
    task: int | None = None

    def __str__(self) -> str:
        where = f"device {self.device}" + ("" if self.task is None else f", task {self.task}")
        return f"{self.kind} violated at {where} (slack {self.slack:.6g})"


@dataclass
class FeasibilityReport:
    violations: list[Violation] = field(default_factory=list)
    cache_slack: np.ndarray | None = None
    energy_slack: np.ndarray | None = None

    @property
    def ok(self) -> bool:
        return not self.violations

    def __bool__(self) -> bool:
        return self.ok


def resource_usage(instance: Instance, x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Per-device cache bits and average energy used by route weights x."""
    x = np.asarray(x, dtype=float)
    cache = np.einsum("kfj,fj->k", x, instance.cache_weight)
    energy = np.einsum("kfj,kfj->k", x, instance.energy_weight)
    return cache, energy


def budget_tolerance(budget: np.ndarray) -> np.ndarray:
    return FEAS_RTOL * np.maximum(np.abs(budget), 1.0)


def is_feasible(instance: Instance, policy: ServicePolicy | np.ndarray, row_atol: float = 1e-9) -> FeasibilityReport:
    """Check the row-sum, cache and energy constraints; every violation is listed with its slack."""
    x = policy.x if isinstance(policy, ServicePolicy) else np.asarray(policy, dtype=float)
    report = FeasibilityReport()
    rows = x.sum(axis=2)
    for k, f in np.argwhere(np.abs(rows - 1.0) > row_atol):
        report.violations.append(Violation("row_sum", int(k), float(1.0 - rows[k, f]), int(f)))
    box = (x < -row_atol) | (x > 1 + row_atol)
    for k, f in np.argwhere(box.any(axis=2)):
        report.violations.append(Violation("box", int(k), float(-np.max(np.abs(x[k, f] - 0.5)) + 0.5), int(f)))
    cache, energy = resource_usage(instance, x)
    report.cache_slack = instance.C - cache
    report.energy_slack = instance.E - energy
    for k in np.flatnonzero(report.cache_slack < -budget_tolerance(instance.C)):
        report.violations.append(Violation("cache", int(k), float(report.cache_slack[k])))
    for k in np.flatnonzero(report.energy_slack < -budget_tolerance(instance.E)):
        report.violations.append(Violation("energy", int(k), float(report.energy_slack[k])))
    return report


# ---------------------------------------------------------------------------
# Config files
#
# A single INI file with three sections.  Lists are comma separated; a scalar
# given for a per-device field applies to every device.
#
#   [system]
#   tau = 0.002
#   mu = 1e-27
#
#   [tasks]
#   alpha = 3
#   compute_load = 10
#   input_bits = 1e7, 1.2e7        ; explicit sizes, or generated:
#   count = 50                     ; number of tasks
#   input_min = 1e7
#   input_max = 1.5e7
#   seed = 0
#
#   [devices]
#   count = 4
#   cache_bits = 1e8               ; or cache_fraction = 0.175 (of total input bits)
#   avg_energy = 1700
#   cpu_freq = 1.1e11
#   inv_spectral_eff = 0.1, 0.2, 0.3, 0.4
#   popularity = zipf              ; zipf | uniform | explicit
#   zipf_gamma = 1.0
#   demand = 0.5, 0.5; 0.9, 0.1    ; explicit rows separated by ';'
# ---------------------------------------------------------------------------


def _floats(text: str) -> np.ndarray:
    return np.array([float(v) for v in text.replace("\n", ",").split(",") if v.strip()])


def instance_from_config(cfg: configparser.ConfigParser) -> Instance:
    from .sampling import zipf_popularity

    sysc, tasks, devs = cfg["system"], cfg["tasks"], cfg["devices"]
    alpha = tasks.getfloat("alpha")
    if "input_bits" in tasks:
        I = _floats(tasks["input_bits"])
    else:
        rng = np.random.default_rng(tasks.getint("seed", 0))
        I = rng.uniform(tasks.getfloat("input_min"), tasks.getfloat("input_max"), tasks.getint("count"))
    F = len(I)
    load = _floats(tasks.get("compute_load", "10"))
    if load.size == 1:
        load = np.full(F, load[0])

    s = _floats(devs["inv_spectral_eff"])
    K = devs.getint("count", len(s))
    if s.size == 1:
        s = np.full(K, s[0])

    def per_device(key):
        v = _floats(devs[key])
        return np.full(K, v[0]) if v.size == 1 else v

    if "cache_fraction" in devs:
        C = per_device("cache_fraction") * I.sum()
    else:
        C = per_device("cache_bits")
    kind = devs.get("popularity", "uniform").strip()
    if kind == "zipf":
        P = np.tile(zipf_popularity(F, devs.getfloat("zipf_gamma", 1.0)), (K, 1))
    elif kind == "uniform":
        P = np.full((K, F), 1.0 / F)
    elif kind == "explicit":
        P = np.array([_floats(row) for row in devs["demand"].split(";")])
        if P.shape[0] == 1:
            P = np.tile(P, (K, 1))
    else:
        raise ValueError(f"unknown popularity kind {kind!r}")
    return make_instance(
        I, alpha, load, C, per_device("avg_energy"), per_device("cpu_freq"), s, P,
        tau=sysc.getfloat("tau"), mu=sysc.getfloat("mu"),
    )


def load_instance(path: str | Path) -> Instance:
    cfg = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    with open(path) as fh:
        cfg.read_file(fh)
    return instance_from_config(cfg)


def save_instance(instance: Instance, path: str | Path) -> None:
    """Write an explicit (non-generated) config that round-trips through load_instance."""

    def fmt(values) -> str:
        return ", ".join(repr(float(v)) for v in np.atleast_1d(values))

    cfg = configparser.ConfigParser()
    cfg["system"] = {"tau": repr(instance.tau), "mu": repr(instance.mu)}
    cfg["tasks"] = {"alpha": repr(instance.alpha), "compute_load": fmt(instance.w), "input_bits": fmt(instance.I)}
    cfg["devices"] = {
        "count": str(instance.K),
        "cache_bits": fmt(instance.C),
        "avg_energy": fmt(instance.E),
        "cpu_freq": fmt(instance.fk),
        "inv_spectral_eff": fmt(instance.s),
        "popularity": "explicit",
        "demand": "; ".join(fmt(row) for row in instance.P),
    }
    with open(path, "w") as fh:
        cfg.write(fh)
