"""Closed forms for the symmetric case: identical tasks, identical devices, uniform demand."""

from __future__ import annotations

import csv
import itertools
import math
from dataclasses import dataclass

import numpy as np

from .instance import Instance, ServicePolicy, make_instance


@dataclass(frozen=True)
class SymmetricInstance:
    F: int
    K: int
    I: float
    w: float
    alpha: float
    C: float
    E: float
    f1: float
    mu: float
    tau: float
    s: float

    def __post_init__(self):
        if self.F < 1 or self.K < 1:
            raise ValueError("need F >= 1 and K >= 1")
        if min(self.I, self.w, self.alpha, self.f1, self.mu, self.tau, self.s) <= 0:
            raise ValueError("sizes, rates and coefficients must be positive")
        if self.C < 0 or self.E < 0:
            raise ValueError("budgets must be nonnegative")
        if self.I * self.w / self.f1 >= self.tau:
            raise ValueError("local computing cannot meet the deadline (I w / f1 >= tau)")

    @classmethod
    def from_betas(cls, F, K, I, w, alpha, beta_c, beta_e, f1, mu, tau, s) -> "SymmetricInstance":
        """Build from normalised budgets beta_c = C/(F O) and beta_e = E/(mu I w f1^2)."""
        return cls(F, K, I, w, alpha, beta_c * F * alpha * I, beta_e * mu * I * w * f1**2, f1, mu, tau, s)

    @property
    def O(self) -> float:
        return self.alpha * self.I

    @property
    def R3(self) -> float:
        return self.I / (self.tau - self.I * self.w / self.f1)

    @property
    def R4(self) -> float:
        return self.O / self.tau

    @property
    def beta_c(self) -> float:
        return self.C / (self.F * self.O)

    @property
    def beta_e(self) -> float:
        return self.E / (self.mu * self.I * self.w * self.f1**2)

    @property
    def multicast_factor(self) -> float:
        """Probability that at least one of K devices requests a given task."""
        return 1.0 - (1.0 - 1.0 / self.F) ** self.K

    def to_instance(self) -> Instance:
        return make_instance(
            [self.I] * self.F, self.alpha, self.w, self.C, self.E, self.f1,
            [self.s] * self.K, np.full(self.F, 1.0 / self.F), self.tau, self.mu,
        )


@dataclass(frozen=True)
class Counts:
    n1: float
    n2: float
    n3: float
    n4: float
    floored: bool = False
    integrality_gap: float = 0.0  # real-valued task mass moved to route 4 by flooring

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.n1, self.n2, self.n3, self.n4)


def _closed_form_counts(sym: SymmetricInstance) -> tuple[float, float, float]:
    F, a, bc, be = sym.F, sym.alpha, sym.beta_c, sym.beta_e
    big = a > 1
    n1 = F * max(bc - (min(bc, be / a) if big else 0.0), 0.0)
    n2 = F * min(a * bc, be) if big else 0.0
    n3 = F * (be - min(a * bc, be)) if big and sym.R3 < sym.R4 else 0.0
    return n1, n2, n3


def in_closed_form_domain(sym: SymmetricInstance) -> bool:
    """True when the closed-form counts fit in the catalogue (n1 + n2 + n3 <= F).

    Larger budgets saturate: every task can be served locally in more than one
    way and the optimum comes from the linear program instead.
    """
    return sum(_closed_form_counts(sym)) <= sym.F * (1 + 1e-12)


def optimal_counts(sym: SymmetricInstance, integer: bool = False) -> Counts:
    """Optimal number of tasks per route (same for every device).

    Outside the closed-form domain the counts come from ``symmetric_lp``.
    """
    if in_closed_form_domain(sym):
        n1, n2, n3 = _closed_form_counts(sym)
    else:
        n1, n2, n3 = symmetric_lp(sym)[0]
    n4 = sym.F - n1 - n2 - n3
    if not integer:
        return Counts(n1, n2, n3, n4)
    eps = 1e-9
    fl = [math.floor(v + eps) for v in (n1, n2, n3)]
    gap = (n1 + n2 + n3) - sum(fl)
    return Counts(*fl, sym.F - sum(fl), floored=True, integrality_gap=gap)


def closed_form_bandwidth(sym: SymmetricInstance, counts) -> float:
    n1, n2, n3 = (counts.as_tuple() if isinstance(counts, Counts) else tuple(counts))[:3]
    return sym.s * sym.multicast_factor * (sym.R3 * n3 + sym.R4 * (sym.F - n1 - n2 - n3))


def mec_bandwidth(sym: SymmetricInstance) -> float:
    return closed_form_bandwidth(sym, (0.0, 0.0, 0.0))


def unicast_bandwidth_counts(sym: SymmetricInstance, counts) -> float:
    """Unicast bandwidth of a policy with the given route counts on every device."""
    n1, n2, n3 = (counts.as_tuple() if isinstance(counts, Counts) else tuple(counts))[:3]
    return sym.K * sym.s * (sym.R3 * n3 + sym.R4 * (sym.F - n1 - n2 - n3)) / sym.F


REGIMES = ("alpha_le_1", "high_f1", "mid_f1", "low_f1", "saturated")


def regime(sym: SymmetricInstance) -> str:
    """Which gain formula applies.

    For alpha > 1 the frequency thresholds are equivalent to comparisons of the
    normalised budgets: f1 >= sqrt(F E / (mu w C)) iff beta_e <= alpha beta_c,
    and f1 > I w / ((1 - 1/alpha) tau) iff R3 < R4.  Boundary points go to the
    regime listed first, whose formula coincides with its neighbour there.
    """
    if not in_closed_form_domain(sym):
        return "saturated"
    if sym.alpha <= 1:
        return "alpha_le_1"
    if sym.beta_e <= sym.alpha * sym.beta_c:
        return "high_f1"
    if sym.R3 < sym.R4:
        return "mid_f1"
    return "low_f1"


def gain_vs_mec(sym: SymmetricInstance) -> tuple[float, str]:
    """Optimal bandwidth divided by the MEC-computing bandwidth, with the regime label."""
    a, bc, be = sym.alpha, sym.beta_c, sym.beta_e
    label = regime(sym)
    if label == "saturated":
        return symmetric_lp(sym)[1] / mec_bandwidth(sym), label
    if label == "alpha_le_1":
        return 1.0 - bc, label
    if label == "high_f1":
        return 1.0 - bc - (1.0 - 1.0 / a) * be, label
    if label == "mid_f1":
        ratio_r = sym.tau / (a * (sym.tau - sym.I * sym.w / sym.f1))  # R3 / R4
        return 1.0 - a * bc - (1.0 - ratio_r) * (be - a * bc), label
    return 1.0 - a * bc, label


def gain_vs_unicast(F: int, K: int) -> float:
    """Optimal multicast bandwidth divided by optimal unicast bandwidth."""
    if F < 1 or K < 1:
        raise ValueError("need F >= 1 and K >= 1")
    return F * (1.0 - (1.0 - 1.0 / F) ** K) / K


def symmetric_lp(sym: SymmetricInstance) -> tuple[tuple[float, float, float], float]:
    """Minimise the closed-form bandwidth over real (n1, n2, n3) by vertex enumeration.

    Constraints: alpha n1 + n2 <= C/I, n2 + n3 <= F beta_e, n1 + n2 + n3 <= F, n >= 0.
    Returns the minimising counts (first vertex in enumeration order on ties)
    and the bandwidth.
    """
    A = np.array([[sym.alpha, 1, 0], [0, 1, 1], [1, 1, 1], [-1, 0, 0], [0, -1, 0], [0, 0, -1]], dtype=float)
    b = np.array([sym.C / sym.I, sym.F * sym.beta_e, sym.F, 0, 0, 0], dtype=float)
    tol = 1e-9 * max(1.0, float(np.abs(b).max()))
    best = None
    for rows in itertools.combinations(range(len(A)), 3):
        M = A[list(rows)]
        if abs(np.linalg.det(M)) < 1e-12:
            continue
        v = np.linalg.solve(M, b[list(rows)])
        if np.all(A @ v <= b + tol):
            v = np.maximum(v, 0.0)
            val = closed_form_bandwidth(sym, v)
            if best is None or val < best[1] - 1e-12 * max(abs(best[1]), 1.0):
                best = (tuple(float(t) for t in v), val)
    return best


def symmetric_policy(sym: SymmetricInstance, counts: Counts | None = None) -> ServicePolicy:
    """Binary policy with floored counts: the first n1 tasks on route 1, the next n2 on route 2, and so on."""
    c = counts if counts is not None else optimal_counts(sym, integer=True)
    n = [int(round(v)) for v in c.as_tuple()[:3]]
    if any(v < 0 for v in n) or sum(n) > sym.F or any(abs(v - u) > 1e-9 for v, u in zip(n, c.as_tuple()[:3])):
        raise ValueError("policy construction needs nonnegative integer counts summing to at most F")
    row = np.repeat([0, 1, 2, 3], n + [sym.F - sum(n)])
    return ServicePolicy.from_routes(np.tile(row, (sym.K, 1)))


@dataclass(frozen=True)
class SymmetricAnalysis:
    beta_c: float
    beta_e: float
    counts: Counts
    B_star: float
    B_mec: float
    B_unicast: float
    ratio_mec: float
    ratio_unicast: float
    regime: str


def analyze(sym: SymmetricInstance) -> SymmetricAnalysis:
    counts = optimal_counts(sym)
    b_star = closed_form_bandwidth(sym, counts)
    b_mec = mec_bandwidth(sym)
    b_uni = unicast_bandwidth_counts(sym, counts)
    ratio_mec, label = gain_vs_mec(sym)
    return SymmetricAnalysis(
        sym.beta_c, sym.beta_e, counts, b_star, b_mec, b_uni, ratio_mec,
        b_star / b_uni if b_uni > 0 else float("nan"), label,
    )


GRID_COLUMNS = ["alpha", "beta_c", "beta_e", "f1", "regime", "ratio_mec", "ratio_unicast"]


def write_grid(path, syms) -> None:
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(GRID_COLUMNS)
        for sym in syms:
            ratio, label = gain_vs_mec(sym)
            wr.writerow([repr(sym.alpha), repr(sym.beta_c), repr(sym.beta_e), repr(sym.f1), label, repr(ratio),
                         repr(gain_vs_unicast(sym.F, sym.K))])
