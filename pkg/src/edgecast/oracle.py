"""Exhaustive optimum for small instances and the single-user knapsack form.

The multi-device search enumerates feasible route assignments per device
(cache and energy budgets are per device), then scores every combination
against a weighted list of request states: either the full request space with
its probabilities or an SAA sample set with weights 1/N.  Ties are broken by
the lexicographic order of the flattened route vector, so the first minimiser
in enumeration order wins.
"""

from __future__ import annotations

import csv
import hashlib
import itertools
from dataclasses import dataclass

import numpy as np

from .bandwidth import request_states, route_rates
from .instance import Instance, ServicePolicy, budget_tolerance

SEARCH_CAP = 2**26
TIE_RTOL = 1e-12
_CHUNK_CELLS = 2**22


@dataclass(frozen=True)
class OracleResult:
    best_policy: ServicePolicy
    best_value: float
    policies_examined: int
    profit: float | None = None


def device_assignments(instance: Instance, k: int, cap: int = SEARCH_CAP) -> np.ndarray:
    """All budget-feasible route vectors for device k in lexicographic order, shape (n, F)."""
    F = instance.F
    if 4**F > cap:
        raise ValueError(f"4^{F} route vectors per device exceed the search cap {cap}")
    routes = np.array(list(itertools.product(range(4), repeat=F)), dtype=int).reshape(-1, F)
    cache = instance.cache_weight[np.arange(F)[None, :], routes].sum(axis=1)
    energy = instance.energy_weight[k][np.arange(F)[None, :], routes].sum(axis=1)
    ok = (cache <= instance.C[k] + budget_tolerance(instance.C[k])) & (
        energy <= instance.E[k] + budget_tolerance(instance.E[k])
    )
    return routes[ok]


def weighted_states(instance: Instance, samples=None) -> tuple[np.ndarray, np.ndarray]:
    """(states, weights): the exact request distribution, or 1/N-weighted distinct samples."""
    if samples is None:
        states, probs = request_states(instance)
        keep = probs > 0
        return states[keep], probs[keep]
    A = np.atleast_2d(np.asarray(samples, dtype=int))
    uniq, counts = np.unique(A, axis=0, return_counts=True)
    return uniq, counts / A.shape[0]


def combination_costs(instance: Instance, assignments: list[np.ndarray], states, weights, lo: int = 0, hi: int | None = None) -> np.ndarray:
    """Objective for every combination with device-0 index in [lo, hi), as a K-d grid."""
    K = instance.K
    R3 = route_rates(instance)[:, :, 2]
    rate_out = instance.O / instance.tau
    s = instance.s
    first = assignments[0][lo:hi]
    blocks = [first] + assignments[1:]
    shape = tuple(len(b) for b in blocks)
    total = np.zeros(shape)

    def along(k, vec):
        sh = [1] * K
        sh[k] = -1
        return vec.reshape(sh)

    for A, wgt in zip(states, weights):
        for f in np.unique(A):
            group = np.flatnonzero(A == f)
            a_in = b_in = a_out = 0.0
            for k in group:
                r = blocks[k][:, f]
                a_in = np.maximum(a_in, along(k, s[k] * (r == 2)))
                b_in = np.maximum(b_in, along(k, R3[k, f] * (r == 2)))
                a_out = np.maximum(a_out, along(k, s[k] * (r == 3)))
            total = total + wgt * (a_in * b_in + rate_out[f] * a_out)
    return total


def enumerate_optimal(instance: Instance, samples=None, cap: int = SEARCH_CAP) -> OracleResult:
    """Globally optimal binary policy by exhaustive search.

    ``samples=None`` minimises the exact expected bandwidth; otherwise the
    sample average over ``samples`` (shape (N, K)).
    """
    assignments = [device_assignments(instance, k, cap) for k in range(instance.K)]
    sizes = [len(a) for a in assignments]
    n_total = int(np.prod(sizes, dtype=object))
    if n_total > cap:
        raise ValueError(f"{n_total} feasible combinations exceed the search cap {cap}")
    states, weights = weighted_states(instance, samples)
    rest = int(np.prod(sizes[1:], dtype=object)) if len(sizes) > 1 else 1
    step = max(1, _CHUNK_CELLS // max(rest, 1))
    values = np.concatenate(
        [combination_costs(instance, assignments, states, weights, lo, lo + step).ravel() for lo in range(0, sizes[0], step)]
    )
    best = values.min()
    idx = int(np.flatnonzero(values <= best + TIE_RTOL * max(abs(best), 1.0))[0])
    picks = np.unravel_index(idx, sizes)
    routes = np.stack([assignments[k][picks[k]] for k in range(instance.K)])
    return OracleResult(ServicePolicy.from_routes(routes), float(values[idx]), n_total)


# ---------------------------------------------------------------------------
# Single-user multiple-choice knapsack
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class KnapsackItem:
    task: int
    route: int  # 1..4
    value: float
    cache_weight: float
    energy_weight: float


def single_user_knapsack_items(instance: Instance, k: int) -> list[KnapsackItem]:
    """Profit and weights of every (task, route) choice for device k in isolation.

    Profit is the bandwidth saved relative to serving the task from the MEC.
    """
    R = route_rates(instance)
    P, s = instance.P[k], instance.s[k]
    R4 = instance.O / instance.tau
    e = instance.energy_cost[k]
    items = []
    for f in range(instance.F):
        save_all = P[f] * R4[f] * s
        items += [
            KnapsackItem(f, 1, save_all, float(instance.O[f]), 0.0),
            KnapsackItem(f, 2, save_all, float(instance.I[f]), float(e[f])),
            KnapsackItem(f, 3, P[f] * (R4[f] - R[k, f, 2]) * s, 0.0, float(e[f])),
            KnapsackItem(f, 4, 0.0, 0.0, 0.0),
        ]
    return items


def solve_single_user(items: list[KnapsackItem], C: float, E: float) -> OracleResult:
    """Exact 4-choice 2-dimensional knapsack by Pareto-frontier dynamic programming.

    Partial solutions are kept only if no other partial solution uses at most
    the same cache and energy while earning at least the same profit.  The
    returned ``best_value`` is the resulting bandwidth (MEC bandwidth minus
    profit); ``profit`` holds the knapsack optimum.
    """
    if C < 0 or E < 0:
        raise ValueError("budgets must be nonnegative")
    tasks = sorted({it.task for it in items})
    by_task = {f: sorted((it for it in items if it.task == f), key=lambda it: it.route) for f in tasks}
    c_tol, e_tol = float(budget_tolerance(np.array(C))), float(budget_tolerance(np.array(E)))
    mec = sum(it.value for it in items if it.route == 1)

    # state: (cache, energy, -profit, routes)
    frontier = [(0.0, 0.0, 0.0, ())]
    examined = 0
    for f in tasks:
        grown = []
        for cache, energy, neg, routes in frontier:
            for it in by_task[f]:
                examined += 1
                c2, e2 = cache + it.cache_weight, energy + it.energy_weight
                if c2 <= C + c_tol and e2 <= E + e_tol:
                    grown.append((c2, e2, neg - it.value, routes + (it.route,)))
        frontier = _pareto(grown)
    best = min(frontier, key=lambda st: (st[2], st[3]))
    floor = best[2] + TIE_RTOL * max(abs(best[2]), 1.0)
    best = min((st for st in frontier if st[2] <= floor), key=lambda st: st[3])
    profit = -best[2]
    policy = ServicePolicy.from_routes(np.array([best[3]]) - 1)
    return OracleResult(policy, mec - profit, examined, profit=profit)


def _pareto(states):
    # Sort by cache, energy, then best profit; sweep keeping a staircase in (energy, profit).
    states.sort(key=lambda st: (st[0], st[1], st[2], st[3]))
    kept = []
    for st in states:
        if any(o[1] <= st[1] and o[2] <= st[2] for o in kept):
            continue
        kept.append(st)
    return kept


# ---------------------------------------------------------------------------
# Regression fixtures
# ---------------------------------------------------------------------------


def instance_hash(instance: Instance) -> str:
    h = hashlib.sha256()
    for arr in (instance.I, instance.w, instance.O, instance.C, instance.E, instance.fk, instance.s, instance.P):
        h.update(np.ascontiguousarray(arr, dtype=np.float64).tobytes())
    h.update(np.array([instance.tau, instance.mu, instance.alpha]).tobytes())
    return h.hexdigest()[:16]


def write_fixtures(path, rows) -> None:
    """rows: iterable of (instance, objective_kind, OracleResult)."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["instance_hash", "objective", "best_value", "policy"])
        for inst, kind, res in rows:
            wr.writerow([instance_hash(inst), kind, repr(res.best_value), res.best_policy.encode()])


def read_fixtures(path) -> list[dict]:
    with open(path, newline="") as fh:
        return [
            {**r, "best_value": float(r["best_value"]), "policy": ServicePolicy.decode(r["policy"])}
            for r in csv.DictReader(fh)
        ]
