"""Baseline policies and the output-caching path for alpha <= 1.

Greedy passes sort with a stable sort on the negated score, so equal scores
keep ascending task order.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import route_rates
from .instance import Instance, ServicePolicy, budget_tolerance, mec_policy


@dataclass(frozen=True)
class TraceRow:
    device: int
    task: int
    route: int  # 1..4
    score: float
    cum_cache: float
    cum_energy: float


@dataclass
class GreedyTrace:
    rows: list[TraceRow] = field(default_factory=list)

    def write_csv(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["device", "task", "route", "score", "cum_cache", "cum_energy"])
            for r in self.rows:
                wr.writerow([r.device, r.task, r.route, repr(r.score), repr(r.cum_cache), repr(r.cum_energy)])


def mec_computing_policy(instance: Instance) -> ServicePolicy:
    """Every request served by downloading the output (route 4)."""
    return mec_policy(instance.K, instance.F)


def _order(scores: np.ndarray, candidates: np.ndarray) -> np.ndarray:
    return candidates[np.argsort(-scores[candidates], kind="stable")]


def _fitting_prefix(order, weight, budget, used=0.0):
    """Longest prefix of ``order`` whose cumulative weight stays within budget."""
    tol = float(budget_tolerance(np.asarray(budget)))
    cum = used + np.cumsum(weight[order])
    n = int(np.searchsorted(cum > budget + tol, True))
    return order[:n]


def greedy_caching_policy(instance: Instance, trace: GreedyTrace | None = None) -> ServicePolicy:
    """Cache outputs in order of P R4 / O until the cache is full; the rest use route 4."""
    R4 = instance.O / instance.tau
    routes = np.full((instance.K, instance.F), 3)
    all_tasks = np.arange(instance.F)
    for k in range(instance.K):
        score = instance.P[k] * R4 / instance.O
        chosen = _fitting_prefix(_order(score, all_tasks), instance.O, instance.C[k])
        routes[k, chosen] = 0
        if trace is not None:
            cum = np.cumsum(instance.O[chosen])
            trace.rows += [TraceRow(k, int(f), 1, float(score[f]), float(c), 0.0) for f, c in zip(chosen, cum)]
    return ServicePolicy.from_routes(routes)


def greedy_caching_computing_policy(instance: Instance, trace: GreedyTrace | None = None) -> ServicePolicy:
    """Greedy input caching with local computing, then output caching or local computing.

    Per device: tasks sorted by P R4 / (O + P mu I w f^2) take route 2 until the
    cache (on input bits) or the energy budget would be exceeded.  If cache is
    left, remaining tasks are output-cached greedily; otherwise, if energy is
    left, remaining tasks with positive saving take route 3 in order of
    (R4 - R3) / (mu I w f^2).
    """
    R = route_rates(instance)
    R4 = instance.O / instance.tau
    routes = np.full((instance.K, instance.F), 3)
    for k in range(instance.K):
        P, e, C, E = instance.P[k], instance.energy_cost[k], instance.C[k], instance.E[k]
        c_tol, e_tol = budget_tolerance(C), budget_tolerance(E)
        score2 = P * R4 / (instance.O + e)
        order = _order(score2, np.arange(instance.F))
        cum_c = np.cumsum(instance.I[order])
        cum_e = np.cumsum(e[order])
        n2 = int(np.searchsorted((cum_c > C + c_tol) | (cum_e > E + e_tol), True))
        first = order[:n2]
        used_c = float(cum_c[n2 - 1]) if n2 else 0.0
        used_e = float(cum_e[n2 - 1]) if n2 else 0.0
        routes[k, first] = 1
        rows = [TraceRow(k, int(f), 2, float(score2[f]), float(c), float(en)) for f, c, en in zip(first, cum_c, cum_e)]

        rest = order[n2:]
        if used_c < C:
            score1 = P * R4 / instance.O
            chosen = _fitting_prefix(_order(score1, rest), instance.O, C, used_c)
            routes[k, chosen] = 0
            cum = used_c + np.cumsum(instance.O[chosen])
            rows += [TraceRow(k, int(f), 1, float(score1[f]), float(c), used_e) for f, c in zip(chosen, cum)]
        elif used_e < E:
            # P cancels in P (R4 - R3) / (P mu I w f^2); dividing it out keeps P = 0 tasks finite.
            score3 = (R4 - R[k, :, 2]) / (instance.mu * instance.fk[k] ** 2 * instance.I * instance.w)
            positive = rest[score3[rest] > 0]
            chosen = _fitting_prefix(_order(score3, positive), e, E, used_e)
            routes[k, chosen] = 2
            cum = used_e + np.cumsum(e[chosen])
            rows += [TraceRow(k, int(f), 3, float(score3[f]), used_c, float(en)) for f, en in zip(chosen, cum)]
        if trace is not None:
            trace.rows += rows
    return ServicePolicy.from_routes(routes)


# ---------------------------------------------------------------------------
# alpha <= 1: output caching only
# ---------------------------------------------------------------------------


def output_cache_objective(instance: Instance, samples, cached) -> np.ndarray:
    """Sample-average output bandwidth when the (k, f) bits in ``cached`` hold outputs.

    ``cached`` is a boolean array of shape (K, F) or a batch (B, K, F); the
    result has shape () or (B,).
    """
    A = np.atleast_2d(np.asarray(samples, dtype=int))
    S = np.asarray(cached, dtype=bool)
    single = S.ndim == 2
    if single:
        S = S[None]
    N, K = A.shape
    R4 = instance.O / instance.tau
    # uncached[b, n, k] = 1 if device k's request in sample n is not cached under set b
    uncached = ~S[:, np.arange(K)[None, :], A]  # (B, N, K)
    weight = instance.s[None, None, :] * uncached
    F = instance.F
    total = np.zeros(S.shape[0])
    for f in range(F):
        mask = A == f  # (N, K)
        if not mask.any():
            continue
        total += R4[f] * np.max(np.where(mask[None], weight, 0.0), axis=2).sum(axis=1)
    total /= N
    return total[0] if single else total


def _marginal_decrease(instance: Instance, A: np.ndarray, cached: np.ndarray) -> np.ndarray:
    """Objective decrease from caching each single (k, f) bit, shape (K, F)."""
    N, K = A.shape
    R4 = instance.O / instance.tau
    s_req = np.where(~cached[np.arange(K)[None, :], A], instance.s[None, :], 0.0)  # (N, K)
    gain = np.zeros((K, instance.F))
    for f in np.unique(A):
        mask = A == f
        vals = np.where(mask, s_req, 0.0)
        srt = np.sort(vals, axis=1)
        top1 = srt[:, -1]
        top2 = srt[:, -2] if K > 1 else np.zeros(N)
        # caching k helps only in samples where k is the strict maximum of uncached requesters
        dec = np.where(mask & (vals >= top1[:, None]) & (vals > 0), vals - top2[:, None], 0.0)
        gain[:, f] = R4[f] * dec.sum(axis=0) / N
    gain[cached] = 0.0
    return gain


def alpha_le1_greedy(instance: Instance, samples) -> ServicePolicy:
    """Greedy output caching on the sample objective, best decrease per cached bit first."""
    if instance.alpha > 1:
        raise ValueError("alpha_le1_greedy requires alpha <= 1")
    A = np.atleast_2d(np.asarray(samples, dtype=int))
    K, F = instance.K, instance.F
    cached = np.zeros((K, F), dtype=bool)
    used = np.zeros(K)
    tol = budget_tolerance(instance.C)
    while True:
        gain = _marginal_decrease(instance, A, cached)
        fits = (~cached) & (used[:, None] + instance.O[None, :] <= (instance.C + tol)[:, None])
        ratio = np.where(fits & (gain > 0), gain / instance.O[None, :], -np.inf)
        if not np.isfinite(ratio).any():
            break
        # ties: ascending task index, then device index
        flat = ratio.T.ravel()
        f, k = divmod(int(np.argmax(flat)), K)
        cached[k, f] = True
        used[k] += instance.O[f]
    routes = np.where(cached, 0, 3)
    return ServicePolicy.from_routes(routes)


@dataclass
class SubmodularityReport:
    trials: int
    monotone_violations: int
    submodular_violations: int
    empty_value: float
    full_value: float
    counterexamples: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return self.monotone_violations == 0 and self.submodular_violations == 0


def submodularity_check(instance: Instance, samples, trials: int, seed: int, batch: int = 2048) -> SubmodularityReport:
    """Randomised check that the output-caching objective is nonincreasing and submodular.

    Each trial draws nested cache sets S within T and a bit e outside T, then
    checks J(S+e) <= J(S) and J(S+e) - J(S) >= J(T+e) - J(T).
    """
    if instance.alpha > 1:
        raise ValueError("the output-caching objective applies to alpha <= 1")
    K, F = instance.K, instance.F
    V = K * F
    if V < 1:
        raise ValueError("empty ground set")
    rng = np.random.default_rng(seed)
    empty = float(output_cache_objective(instance, samples, np.zeros((K, F), bool)))
    full = float(output_cache_objective(instance, samples, np.ones((K, F), bool)))
    scale = max(empty, 1.0)
    tol = 1e-12 * scale
    report = SubmodularityReport(trials, 0, 0, empty, full)
    done = 0
    while done < trials:
        B = min(batch, trials - done)
        e = rng.integers(V, size=B)
        T = rng.random((B, V)) < rng.random((B, 1))
        T[np.arange(B), e] = False
        S = T & (rng.random((B, V)) < rng.random((B, 1)))
        Se, Te = S.copy(), T.copy()
        Se[np.arange(B), e] = True
        Te[np.arange(B), e] = True
        sets = np.concatenate([S, Se, T, Te]).reshape(4 * B, K, F)
        vals = output_cache_objective(instance, samples, sets).reshape(4, B)
        jS, jSe, jT, jTe = vals
        mono = (jSe > jS + tol) | (jTe > jT + tol)
        sub = (jSe - jS) < (jTe - jT) - tol
        report.monotone_violations += int(mono.sum())
        report.submodular_violations += int(sub.sum())
        for i in np.flatnonzero(mono | sub)[: max(0, 5 - len(report.counterexamples))]:
            report.counterexamples.append({"S": S[i].reshape(K, F), "T": T[i].reshape(K, F), "e": divmod(int(e[i]), F)})
        done += B
    return report
