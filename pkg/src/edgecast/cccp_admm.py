"""Penalised DC reformulation solved by CCCP with a consensus-ADMM inner loop.

The SAA objective is written with per-(sample, task) auxiliaries

    a_in  = kappa_f * max_k s_k      1(A_nk = f) x[k, f, route 3]
    b_in  = max_k R3[k, f] / kappa_f  1(A_nk = f) x[k, f, route 3]
    a_out = max_k s_k                1(A_nk = f) x[k, f, route 4]

so that the input bandwidth a_in * b_in = ((a+b)^2 - (a-b)^2) / 4 is a
difference of convex functions.  kappa_f only rescales the two factors so that
they have comparable magnitude (kappa_f = 1 gives the plain split); their
product, and hence the objective, does not depend on it.

Binary route weights are enforced with the concave penalty -rho sum x(x-1).
Each CCCP step linearises the concave parts at the previous iterate and solves
the resulting convex problem with consensus ADMM over per-sample copies of x.
"""

from __future__ import annotations

import csv
import itertools
import logging
import warnings
from dataclasses import dataclass, field

import numpy as np

from .bandwidth import route_rates, saa_objective
from .instance import Instance, ServicePolicy, budget_tolerance, is_feasible, mec_policy

log = logging.getLogger(__name__)


@dataclass(frozen=True)
class SolverConfig:
    delta: float = 1e-6  # CCCP stop: surrogate decrement relative to its magnitude
    admm_tol: float = 1e-5  # max |x^{k,n} - x| and max |x^{q+1} - x^q| at ADMM exit
    max_outer: int = 60
    max_inner: int = 5000
    rho_init: float = 1e4
    rho_mult: float = 2.0
    rho_cap: float = 1e8
    gamma: float | None = None  # None: scale of the per-sample objective coefficients
    balance_every: int = 25
    max_gamma_changes: int = 6  # per ADMM call; gamma is frozen afterwards so plain ADMM convergence applies
    round_threshold: float = 0.05
    aux_scale: str = "balanced"  # or "none"
    polish: bool = True  # single-row local search after rounding and repair


@dataclass
class DcState:
    """Auxiliaries (N, F) and the relaxed policy (K, F, 4)."""

    a_in: np.ndarray
    b_in: np.ndarray
    a_out: np.ndarray
    x: np.ndarray
    scale: np.ndarray


class SampleProblem:
    """Instance data specialised to one sample set."""

    def __init__(self, instance: Instance, samples, aux_scale: str = "balanced"):
        self.instance = instance
        self.A = np.atleast_2d(np.asarray(samples, dtype=int))
        self.N, self.K = self.A.shape
        self.F = instance.F
        if self.K != instance.K:
            raise ValueError(f"samples have {self.K} devices, instance has {instance.K}")
        self.s = instance.s
        self.R3 = route_rates(instance)[:, :, 2]
        self.R4 = instance.O / instance.tau
        if aux_scale == "balanced":
            self.scale = np.sqrt(self.R3.mean(axis=0) / self.s.mean())
        elif aux_scale == "none":
            self.scale = np.ones(self.F)
        else:
            raise ValueError(f"unknown aux_scale {aux_scale!r}")
        self.sigma = self.s[:, None] * self.scale[None, :]  # (K, F) coefficient of x3 in a_in
        self.r = self.R3 / self.scale[None, :]  # (K, F) coefficient of x3 in b_in
        self.req = self.A[:, :, None] == np.arange(self.F)[None, None, :]  # (N, K, F)
        self.w1 = instance.cache_weight
        self.w2 = instance.energy_weight
        self.groups = self._groups()

    def _groups(self):
        """(n, f) pairs with at least one requester, bucketed by the number of requesters."""
        buckets: dict[int, tuple[list, list, list]] = {}
        for n in range(self.N):
            row = self.A[n]
            for f in np.unique(row):
                ks = np.flatnonzero(row == f)
                b = buckets.setdefault(len(ks), ([], [], []))
                b[0].append(n)
                b[1].append(f)
                b[2].append(ks)
        return {q: (np.array(ns), np.array(fs), np.array(ks)) for q, (ns, fs, ks) in sorted(buckets.items())}

    def aux(self, x) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
        """Max-definitions of the auxiliaries for a global (K,F,4) or local (N,K,F,4) x."""
        x = np.asarray(x, dtype=float)
        if x.ndim == 3:
            x = x[None]
        x3 = np.where(self.req, x[..., 2], 0.0)
        x4 = np.where(self.req, x[..., 3], 0.0)
        a_in = np.max(self.sigma[None] * x3, axis=1, initial=0.0)
        b_in = np.max(self.r[None] * x3, axis=1, initial=0.0)
        a_out = np.max(self.s[None, :, None] * x4, axis=1, initial=0.0)
        return a_in, b_in, a_out

    def state(self, x) -> DcState:
        a_in, b_in, a_out = self.aux(x)
        return DcState(a_in, b_in, a_out, np.array(x, dtype=float), self.scale)


def dc_state_from_policy(instance: Instance, policy, samples, aux_scale: str = "balanced") -> DcState:
    x = policy.x if isinstance(policy, ServicePolicy) else policy
    return SampleProblem(instance, samples, aux_scale).state(x)


# ---------------------------------------------------------------------------
# Objectives
# ---------------------------------------------------------------------------


def _check_dims(instance: Instance, state: DcState):
    if state.a_in.shape != state.b_in.shape or state.a_in.shape != state.a_out.shape:
        raise ValueError("auxiliary arrays must share one (N, F) shape")
    if state.a_in.ndim != 2 or state.a_in.shape[1] != instance.F:
        raise ValueError(f"auxiliaries must have shape (N, {instance.F}), got {state.a_in.shape}")
    if state.x.shape != (instance.K, instance.F, 4):
        raise ValueError(f"x must have shape {(instance.K, instance.F, 4)}, got {state.x.shape}")


def dc_objective(instance: Instance, state: DcState) -> float:
    """Sample-average bandwidth as a function of the auxiliaries.

    The input term ((a+b)^2 - (a-b)^2)/4 is evaluated as the product a*b it
    equals; the split form loses all precision when a and b differ by many
    orders of magnitude (as with ``aux_scale="none"``).
    """
    _check_dims(instance, state)
    per = state.a_in * state.b_in + (instance.O / instance.tau)[None, :] * state.a_out
    return float(per.sum(axis=1).mean())


def penalized_objective(instance: Instance, state: DcState, rho: float) -> float:
    if rho <= 0:
        raise ValueError("rho must be positive")
    x = state.x
    return dc_objective(instance, state) - rho * float(np.sum(x * (x - 1)))


def cccp_subproblem_objective(instance: Instance, state: DcState, anchor: DcState, rho: float) -> float:
    """Convex surrogate with the concave parts linearised at ``anchor`` (constant omitted)."""
    _check_dims(instance, state)
    a, b = state.a_in, state.b_in
    c = (anchor.a_in - anchor.b_in) / 2
    per = (a + b) ** 2 / 4 + (instance.O / instance.tau)[None, :] * state.a_out - c * (a - b)
    return float(per.sum(axis=1).mean()) - rho * float(np.sum((2 * anchor.x - 1) * state.x))


def linearization_constant(anchor: DcState, rho: float) -> float:
    """Constant that makes surrogate + constant touch the penalised objective at the anchor."""
    d = anchor.a_in - anchor.b_in
    return float((d**2 / 4).sum(axis=1).mean()) + rho * float(np.sum(anchor.x**2))


# ---------------------------------------------------------------------------
# ADMM steps
# ---------------------------------------------------------------------------


@dataclass
class AdmmState:
    x_local: np.ndarray  # (N, K, F, 4)
    lam: np.ndarray  # (N, K, F, 4)
    x: np.ndarray  # (K, F, 4)
    gamma: float
    rho: float
    anchor: DcState
    outer: int = 0
    inner: int = 0
    multipliers: dict = field(default_factory=dict)


def _patterns(q: int, modes: int) -> np.ndarray:
    return np.array(list(itertools.product(range(modes), repeat=q)), dtype=int).reshape(-1, q)


def solve_output_group(U, sv, rate, gamma):
    """min_t>=0  rate*t + gamma/2 * sum_k max(0, U_k - t/s_k)^2, batched over rows.

    U, sv: (P, q); rate: (P,).  Returns (t, x) with x_k = min(U_k, t/s_k).
    """
    P, q = U.shape
    bp = sv * U
    order = np.argsort(-bp, axis=1)
    Us = np.take_along_axis(U, order, 1)
    ss = np.take_along_axis(sv, order, 1)
    num = np.cumsum(Us / ss, axis=1) - (rate / gamma)[:, None]
    den = np.cumsum(1.0 / ss**2, axis=1)
    cands = np.concatenate([np.zeros((P, 1)), np.maximum(num / den, 0.0)], axis=1)  # (P, q+1)
    resid = np.maximum(0.0, U[:, None, :] - cands[:, :, None] / sv[:, None, :])
    phi = rate[:, None] * cands + 0.5 * gamma * np.sum(resid**2, axis=2)
    t = cands[np.arange(P), np.argmin(phi, axis=1)]
    return t, np.minimum(U, t[:, None] / sv)


def _psi(a, b, c, U, sg, r, gamma):
    """Input-part objective at candidate (a, b); a, b: (P, M), U/sg/r: (P, q)."""
    xa = a[:, :, None] / sg[:, None, :]
    xb = b[:, :, None] / r[:, None, :]
    resid = np.maximum(0.0, U[:, None, :] - np.minimum(xa, xb))
    return (a + b) ** 2 / 4 - c[:, None] * (a - b) + 0.5 * gamma * np.sum(resid**2, axis=2)


def solve_input_group(U, sg, r, c, gamma):
    """min over a, b >= 0 of (a+b)^2/4 - c(a-b) + gamma/2 sum_k max(0, U_k - min(a/sg_k, b/r_k))^2.

    Every piece of this convex piecewise-quadratic function is enumerated:
    smooth 2-d pieces (each requester free, clamped by a, or clamped by b),
    kink lines b = (r_k/sg_k) a where a requester is clamped by both, and the
    two axes.  The stationary point of each piece is a candidate; the best
    candidate under the exact objective is the minimiser.
    """
    P, q = U.shape
    cand_a, cand_b = [], []

    # smooth 2-d pieces
    pat = _patterns(q, 3)  # (M, q)
    inA = (pat == 1)[None].astype(float)
    inB = (pat == 2)[None].astype(float)
    alA = gamma * np.einsum("mq,pq->pm", inA[0], 1.0 / sg**2)
    beA = gamma * np.einsum("mq,pq->pm", inA[0], U / sg)
    alB = gamma * np.einsum("mq,pq->pm", inB[0], 1.0 / r**2)
    beB = gamma * np.einsum("mq,pq->pm", inB[0], U / r)
    h11, h22 = 0.5 + alA, 0.5 + alB
    det = h11 * h22 - 0.25
    rhs1 = c[:, None] + beA
    rhs2 = -c[:, None] + beB
    with np.errstate(divide="ignore", invalid="ignore"):
        a2 = (h22 * rhs1 - 0.5 * rhs2) / det
        b2 = (h11 * rhs2 - 0.5 * rhs1) / det
    good = det > 1e-300
    cand_a.append(np.where(good, a2, 0.0))
    cand_b.append(np.where(good, b2, 0.0))

    # kink lines through the origin
    pat2 = _patterns(q, 2).astype(float)  # (M2, q), 1 = clamped
    ratios = r / sg  # (P, q)
    for i in range(q):
        rho = ratios[:, i]  # (P,)
        m = np.minimum(1.0 / sg, rho[:, None] / r)  # (P, q)
        num = c[:, None] * (1 - rho)[:, None] + gamma * np.einsum("mq,pq->pm", pat2, m * U)
        den = (1 + rho)[:, None] ** 2 / 2 + gamma * np.einsum("mq,pq->pm", pat2, m**2)
        a1 = num / den
        cand_a.append(a1)
        cand_b.append(rho[:, None] * a1)

    # axes and origin
    zero = np.zeros((P, 1))
    cand_a += [zero, np.maximum(2 * c, 0.0)[:, None], zero]
    cand_b += [np.maximum(-2 * c, 0.0)[:, None], zero, zero]

    a = np.maximum(np.concatenate(cand_a, axis=1), 0.0)
    b = np.maximum(np.concatenate(cand_b, axis=1), 0.0)
    vals = _psi(a, b, c, U, sg, r, gamma)
    best = np.argmin(vals, axis=1)
    a_opt = a[np.arange(P), best]
    b_opt = b[np.arange(P), best]
    x = np.minimum(U, np.minimum(a_opt[:, None] / sg, b_opt[:, None] / r))
    return a_opt, b_opt, x


def admm_update_locals(prob: SampleProblem, st: AdmmState):
    """Step 1: per-(sample, task) exact minimisation of the augmented Lagrangian.

    Returns (a_in, b_in, a_out, x_local).  Entries of devices that do not
    request f in sample n, and routes 1-2 of every device, take the
    unconstrained closed form x^q + (rho (2 x(t) - 1) - lambda) / gamma.
    """
    g = st.lam - st.rho * (2 * st.anchor.x - 1)[None]
    u = st.x[None] - g / st.gamma
    xl = u.copy()
    N, F = prob.N, prob.F
    a_in = np.zeros((N, F))
    b_in = np.zeros((N, F))
    a_out = np.zeros((N, F))
    c_all = (st.anchor.a_in - st.anchor.b_in) / 2
    for q, (ns, fs, ks) in prob.groups.items():
        nn = np.repeat(ns[:, None], q, axis=1)
        ff = np.repeat(fs[:, None], q, axis=1)
        U4 = u[nn, ks, ff, 3]
        t, x4 = solve_output_group(U4, prob.s[ks], prob.R4[fs], st.gamma)
        a_out[ns, fs] = t
        xl[nn, ks, ff, 3] = x4
        U3 = u[nn, ks, ff, 2]
        a, b, x3 = solve_input_group(U3, prob.sigma[ks, ff], prob.r[ks, ff], c_all[ns, fs], st.gamma)
        a_in[ns, fs] = a
        b_in[ns, fs] = b
        xl[nn, ks, ff, 2] = x3
    return a_in, b_in, a_out, xl


def project_simplex_rows(y: np.ndarray) -> np.ndarray:
    """Euclidean projection of each row of y onto the probability simplex.

    The threshold is the largest partial average (sum of the j largest - 1) / j,
    which is attained exactly at the support size of the projection.
    """
    srt = np.sort(y, axis=-1)[..., ::-1]
    theta = np.max((np.cumsum(srt, axis=-1) - 1.0) / np.arange(1, y.shape[-1] + 1), axis=-1)
    return np.maximum(y - theta[..., None], 0.0)


def _jacobian(x, a, b) -> float:
    """d(sum a*x)/d(nu_b) for x = rowsimplex(xbar - ... - nu_b b), on the current support."""
    S = x > 0
    n = S.sum(axis=1)
    sa = np.where(S, a, 0.0)
    sb = np.where(S, b, 0.0)
    return float(np.sum(-(sa * sb).sum(axis=1) + sa.sum(axis=1) * sb.sum(axis=1) / n))


def _monotone_root(fun, hi, tol, max_iter=200):
    """Root in [0, hi] of a nonincreasing piecewise-linear g given as fun(v) -> (g, slope).

    Requires g(0) > 0 >= g(hi).  Newton steps land exactly on the root once the
    iterate sits on the root's linear piece; steps leaving the bracket are
    replaced by bisection.
    """
    lo, v = 0.0, 0.0
    g, slope = fun(v)
    for _ in range(max_iter):
        if abs(g) <= tol:
            return v
        if g > 0:
            lo = v
        else:
            hi = v
        step = v - g / slope if slope < 0 else None
        v = step if step is not None and lo < step < hi else 0.5 * (lo + hi)
        if hi - lo <= 1e-15 * max(hi, 1.0):
            return hi
        g, slope = fun(v)
    raise RuntimeError("multiplier search did not converge")


def project_device(xbar, w1, w2, C, E):
    """Project one device's rows onto {row simplex, cache <= C, energy <= E}.

    The minimiser is x(nu) = rowsimplex(xbar - nu1 w1 - nu2 w2) for multipliers
    nu >= 0 satisfying complementary slackness.  nu1 is found for each trial nu2
    (inner search), and nu2 so that the energy budget holds (outer search);
    both budget functions are piecewise linear and nonincreasing in their own
    multiplier.  Returns (x, nu1, nu2).
    """
    c_tol = 0.5 * float(budget_tolerance(np.asarray(C)))
    e_tol = 0.5 * float(budget_tolerance(np.asarray(E)))

    def x_of(n1, n2):
        return project_simplex_rows(xbar - n1 * w1 - n2 * w2)

    x0 = x_of(0.0, 0.0)
    if np.sum(w1 * x0) <= C + c_tol and np.sum(w2 * x0) <= E + e_tol:
        return x0, 0.0, 0.0

    span = float(xbar.max() - xbar.min()) + 2.0

    def upper(w):
        pos = w[w > 0]
        return span / pos.min() if pos.size else 0.0

    hi1, hi2 = upper(w1), upper(w2)

    def nu1_for(n2):
        x = x_of(0.0, n2)
        if np.sum(w1 * x) <= C + c_tol:
            return 0.0, x

        def g(v):
            xv = x_of(v, n2)
            return float(np.sum(w1 * xv)) - C, _jacobian(xv, w1, w1)

        v = _monotone_root(g, hi1, c_tol)
        return v, x_of(v, n2)

    n1, x = nu1_for(0.0)
    if np.sum(w2 * x) <= E + e_tol:
        return x, n1, 0.0

    def h(n2):
        v, xv = nu1_for(n2)
        slope = _jacobian(xv, w2, w2)
        if v > 0:  # nu1 moves with nu2 to keep the cache budget tight
            d11 = _jacobian(xv, w1, w1)
            if d11 < 0:
                slope -= _jacobian(xv, w2, w1) * _jacobian(xv, w1, w2) / d11
        return float(np.sum(w2 * xv)) - E, slope

    n2 = _monotone_root(h, hi2, e_tol)
    n1, x = nu1_for(n2)
    return x, n1, n2


def admm_update_global_x(prob: SampleProblem, st: AdmmState) -> np.ndarray:
    """Step 2: per-device projection of the consensus average onto the budget polytope."""
    xbar = np.mean(st.x_local + st.lam / st.gamma, axis=0)
    x = np.empty_like(xbar)
    scale = st.gamma * prob.N
    inst = prob.instance
    for k in range(prob.K):
        x[k], n1, n2 = project_device(xbar[k], prob.w1, prob.w2[k], inst.C[k], inst.E[k])
        st.multipliers[k] = (n1 * scale, n2 * scale)  # cache and energy multipliers in objective units
    return x


def admm_update_duals(st: AdmmState) -> np.ndarray:
    if st.gamma <= 0:
        raise ValueError("gamma must be positive")
    return st.lam + st.gamma * (st.x_local - st.x[None])


# ---------------------------------------------------------------------------
# CCCP driver
# ---------------------------------------------------------------------------


@dataclass
class TraceRow:
    outer_iter: int
    inner_iter: int
    rho: float
    surrogate_value: float
    penalized_value: float
    consensus_residual: float
    binary_gap: float
    accepted: bool


@dataclass
class SolveResult:
    policy: ServicePolicy
    objective: float
    relaxed_x: np.ndarray
    trace: list[TraceRow]
    rounding: dict
    warning: str | None = None

    def write_diagnostics(self, path) -> None:
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(
                ["outer_iter", "inner_iter", "rho", "surrogate_value", "penalized_value", "consensus_residual", "binary_gap", "accepted"]
            )
            for t in self.trace:
                wr.writerow(
                    [t.outer_iter, t.inner_iter, repr(t.rho), repr(t.surrogate_value), repr(t.penalized_value),
                     repr(t.consensus_residual), repr(t.binary_gap), int(t.accepted)]
                )


def binary_gap(x: np.ndarray) -> float:
    return float(np.max(np.minimum(x, 1 - x))) if x.size else 0.0


def default_gamma(prob: SampleProblem) -> float:
    coef = prob.s[None, :] * prob.R4[prob.A]  # per request (n, k)
    return float(np.median(coef))


def run_admm(prob: SampleProblem, st: AdmmState, cfg: SolverConfig) -> tuple[int, float]:
    """Iterate the three ADMM steps until primal and dual residuals fall below tolerance.

    Residual balancing doubles gamma when the consensus residual dominates and
    halves it when the change in x dominates, at most ``max_gamma_changes``
    times per call.
    """
    primal = dual = np.inf
    changes = 0
    for q in range(1, cfg.max_inner + 1):
        _, _, _, st.x_local = admm_update_locals(prob, st)
        x_prev = st.x
        st.x = admm_update_global_x(prob, st)
        st.lam = admm_update_duals(st)
        primal = float(np.max(np.abs(st.x_local - st.x[None])))
        dual = float(np.max(np.abs(st.x - x_prev)))
        st.inner += 1
        if primal <= cfg.admm_tol and dual <= cfg.admm_tol:
            return q, primal
        if q % cfg.balance_every == 0 and changes < cfg.max_gamma_changes:
            if primal > 10 * dual:
                st.gamma *= 2.0
                changes += 1
            elif dual > 10 * primal:
                st.gamma /= 2.0
                changes += 1
    return cfg.max_inner, primal


def _task_terms(prob: SampleProblem, f: int, routes_f: np.ndarray) -> float:
    """Sample-average bandwidth of task f when device k serves it by route routes_f[k] (0-based)."""
    req = prob.A == f  # (N, K)
    on3 = req & (routes_f == 2)[None, :]
    on4 = req & (routes_f == 3)[None, :]
    a_in = np.max(np.where(on3, prob.s[None, :], 0.0), axis=1)
    b_in = np.max(np.where(on3, prob.R3[:, f][None, :], 0.0), axis=1)
    a_out = np.max(np.where(on4, prob.s[None, :], 0.0), axis=1)
    return float(np.mean(a_in * b_in + prob.R4[f] * a_out))


def _fits(prob: SampleProblem, routes: np.ndarray, k: int) -> bool:
    inst = prob.instance
    F = np.arange(prob.F)
    cache = inst.cache_weight[F, routes[k]].sum()
    energy = inst.energy_weight[k][F, routes[k]].sum()
    return bool(cache <= inst.C[k] + budget_tolerance(inst.C[k]) and energy <= inst.E[k] + budget_tolerance(inst.E[k]))


def _round_and_repair(prob: SampleProblem, x: np.ndarray):
    """Row-wise argmax, then demote rows to route 4 until every budget holds.

    Each demotion picks the row with the smallest objective increase per unit
    of the violated budget it frees; ties go to the lower task index.
    """
    routes = np.argmax(x, axis=2)
    demoted = []
    uses = {"cache": (0, 1), "energy": (1, 2)}
    inst = prob.instance
    while True:
        rep = is_feasible(inst, ServicePolicy.from_routes(routes))
        bad = [v for v in rep.violations if v.kind in uses]
        if not bad:
            return routes, demoted
        v = bad[0]
        k = v.device
        weight = inst.cache_weight if v.kind == "cache" else inst.energy_weight[k]
        best = None
        for f in range(inst.F):
            j = routes[k, f]
            if j not in uses[v.kind] or weight[f, j] <= 0:
                continue
            trial = routes[:, f].copy()
            trial[k] = 3
            regret = (_task_terms(prob, f, trial) - _task_terms(prob, f, routes[:, f])) / weight[f, j]
            if best is None or regret < best[0]:
                best = (regret, f)
        routes[k, best[1]] = 3  # a violated budget always has a consuming row
        demoted.append((k, best[1]))


def _polish(prob: SampleProblem, routes: np.ndarray, max_moves: int = 10_000):
    """Best-improvement search over single-row route changes and same-device pairs.

    The objective is a sum of per-task terms, so for two rows of one device on
    different tasks the change is the sum of the two single-row changes, and so
    is the change in each budget.  Every move keeps the device within budget.
    """
    inst = prob.instance
    K, F = prob.K, prob.F
    routes = routes.copy()
    base = np.array([_task_terms(prob, f, routes[:, f]) for f in range(F)])
    delta = np.zeros((K, F, 4))

    def refresh(f):
        for k in range(K):
            for j in range(4):
                trial = routes[:, f].copy()
                trial[k] = j
                delta[k, f, j] = 0.0 if j == routes[k, f] else _task_terms(prob, f, trial) - base[f]

    for f in range(F):
        refresh(f)
    rows = np.arange(F)
    same_task = rows.repeat(4)[:, None] == rows.repeat(4)[None, :]
    moves = 0
    while moves < max_moves:
        tol = 1e-12 * max(float(base.sum()), 1.0)
        best = (-tol, None)
        for k in range(K):
            w1 = inst.cache_weight
            w2 = inst.energy_weight[k]
            dc = (w1 - w1[rows, routes[k]][:, None]).ravel()
            de = (w2 - w2[rows, routes[k]][:, None]).ravel()
            room_c = inst.C[k] + budget_tolerance(inst.C[k]) - w1[rows, routes[k]].sum()
            room_e = inst.E[k] + budget_tolerance(inst.E[k]) - w2[rows, routes[k]].sum()
            d = delta[k].ravel()
            single = np.where((dc <= room_c) & (de <= room_e), d, np.inf)
            i = int(np.argmin(single))
            if single[i] < best[0]:
                best = (single[i], (k, [i]))
            pair = d[:, None] + d[None, :]
            ok = ~same_task & (dc[:, None] + dc[None, :] <= room_c) & (de[:, None] + de[None, :] <= room_e)
            pair = np.where(ok, pair, np.inf)
            i = int(np.argmin(pair))
            if pair.flat[i] < best[0]:
                best = (pair.flat[i], (k, list(divmod(i, 4 * F))))
        if best[1] is None:
            break
        k, picks = best[1]
        for i in picks:
            f, j = divmod(i, 4)
            routes[k, f] = j
        for i in picks:
            f = i // 4
            base[f] = _task_terms(prob, f, routes[:, f])
            refresh(f)
        moves += 1
    return routes, moves


def solve_cccp_admm(instance: Instance, samples, config: SolverConfig | None = None) -> SolveResult:
    """CCCP-ADMM from the all-route-4 policy, followed by rounding and budget repair."""
    cfg = config or SolverConfig()
    if instance.alpha <= 1:
        log.info("alpha <= 1: routes 2 and 3 never help; the solver still runs")
    prob = SampleProblem(instance, samples, cfg.aux_scale)
    K, F, N = prob.K, prob.F, prob.N
    x_t = mec_policy(K, F).x.copy()
    rho = cfg.rho_init
    gamma = cfg.gamma if cfg.gamma is not None else default_gamma(prob)
    anchor = prob.state(x_t)
    st = AdmmState(np.broadcast_to(x_t, (N, K, F, 4)).copy(), np.zeros((N, K, F, 4)), x_t.copy(), gamma, rho, anchor)
    trace: list[TraceRow] = []
    warning = None
    value = penalized_objective(instance, anchor, rho)  # majoriser value at the current anchor
    trace.append(TraceRow(0, 0, rho, value, value, 0.0, binary_gap(x_t), True))

    for t in range(1, cfg.max_outer + 1):
        st.anchor, st.rho = anchor, rho
        inner, resid = run_admm(prob, st, cfg)
        if inner >= cfg.max_inner and resid > cfg.admm_tol:
            warning = f"ADMM hit max_inner={cfg.max_inner} (residual {resid:.2e}) at outer iteration {t}"
        x_new = np.clip(st.x, 0.0, 1.0)
        cand = prob.state(x_new)
        surrogate = cccp_subproblem_objective(instance, cand, anchor, rho) + linearization_constant(anchor, rho)
        current = penalized_objective(instance, anchor, rho)
        accepted = surrogate <= current + 1e-12 * max(abs(current), 1.0)
        if accepted:
            decrement = value - surrogate
            value = surrogate
            x_t, anchor = x_new, cand
        else:
            decrement = 0.0
        gap = binary_gap(x_t)
        trace.append(TraceRow(t, inner, rho, value, penalized_objective(instance, anchor, rho), resid, gap, accepted))
        if decrement <= cfg.delta * max(abs(value), 1.0):
            if gap > cfg.round_threshold and rho * cfg.rho_mult <= cfg.rho_cap:
                rho *= cfg.rho_mult
                value = penalized_objective(instance, anchor, rho)
                continue
            break
    else:
        warning = warning or f"CCCP hit max_outer={cfg.max_outer}"

    if warning:
        warnings.warn(warning, RuntimeWarning, stacklevel=2)
    routes, demoted = _round_and_repair(prob, x_t)
    moves = 0
    if cfg.polish:
        routes, moves = _polish(prob, routes)
    policy = ServicePolicy.from_routes(routes)
    obj = saa_objective(instance, policy, prob.A)
    mec = mec_policy(K, F)
    mec_obj = saa_objective(instance, mec, prob.A)
    fallback = obj > mec_obj
    if fallback:
        policy, obj = mec, mec_obj
    rounding = {"binary_gap": binary_gap(x_t), "demoted": demoted, "polish_moves": moves, "fell_back_to_mec": fallback}
    return SolveResult(policy, obj, x_t, trace, rounding, warning)
