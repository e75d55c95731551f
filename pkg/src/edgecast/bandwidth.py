"""Route rates and multicast bandwidth objectives."""

from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass

import numpy as np

from .instance import Instance, ServicePolicy

EXACT_STATE_CAP = 10**6


def route_rates(instance: Instance) -> np.ndarray:
    """Minimum download rate (bits/s) per device, task and route, shape (K, F, 4)."""
    slack = instance.tau - instance.compute_time
    if np.any(slack <= 0):
        k, f = map(int, np.argwhere(slack <= 0)[0])
        raise ValueError(f"tau does not exceed the local compute time for task {f} on device {k}")
    R = np.zeros((instance.K, instance.F, 4))
    R[:, :, 2] = instance.I[None, :] / slack
    R[:, :, 3] = (instance.O / instance.tau)[None, :]
    return R


def route_rate(instance: Instance, k: int, f: int, j: int) -> float:
    """Rate for device k, task f and route j (1-based route, as in Table I)."""
    if j in (1, 2):
        return 0.0
    if j == 3:
        slack = instance.tau - instance.compute_time[k, f]
        if slack <= 0:
            raise ValueError(f"tau does not exceed the local compute time for task {f} on device {k}")
        return float(instance.I[f] / slack)
    if j == 4:
        return float(instance.O[f] / instance.tau)
    raise ValueError(f"route must be 1..4, got {j}")


@dataclass(frozen=True)
class BandwidthBreakdown:
    input_hz: np.ndarray
    output_hz: np.ndarray

    @property
    def total(self) -> float:
        return float(self.input_hz.sum() + self.output_hz.sum())


def _policy_array(policy) -> np.ndarray:
    return policy.x if isinstance(policy, ServicePolicy) else np.asarray(policy, dtype=float)


def multicast_terms(instance: Instance, x, samples) -> tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Auxiliary maxima for a batch of request states.

    Returns ``(a_in, b_in, a_out)``, each of shape (N, F): the worst inverse
    spectral efficiency among route-3 requesters, the largest route-3 rate among
    them, and the worst inverse spectral efficiency among route-4 requesters.
    An empty maximum is 0.
    """
    x = _policy_array(x)
    A = np.atleast_2d(np.asarray(samples, dtype=int))
    N, K = A.shape
    F = instance.F
    req = A[:, :, None] == np.arange(F)[None, None, :]  # (N, K, F)
    R3 = route_rates(instance)[:, :, 2]
    s = instance.s[None, :, None]
    x3 = np.where(req, x[None, :, :, 2], 0.0)
    x4 = np.where(req, x[None, :, :, 3], 0.0)
    a_in = np.max(s * x3, axis=1, initial=0.0)
    b_in = np.max(R3[None] * x3, axis=1, initial=0.0)
    a_out = np.max(s * x4, axis=1, initial=0.0)
    return a_in, b_in, a_out


def batch_bandwidth(instance: Instance, x, samples) -> tuple[np.ndarray, np.ndarray]:
    """Per-sample, per-task input and output bandwidth (Hz), each (N, F)."""
    a_in, b_in, a_out = multicast_terms(instance, x, samples)
    return a_in * b_in, (instance.O / instance.tau)[None, :] * a_out


def sample_bandwidth(instance: Instance, policy, sample) -> BandwidthBreakdown:
    """Multicast bandwidth for one request state (one task index per device)."""
    b_in, b_out = batch_bandwidth(instance, policy, np.asarray(sample, dtype=int)[None, :])
    return BandwidthBreakdown(b_in[0], b_out[0])


def per_sample_totals(instance: Instance, policy, samples, chunk: int = 20000) -> np.ndarray:
    A = np.atleast_2d(np.asarray(samples, dtype=int))
    out = np.empty(A.shape[0])
    for lo in range(0, A.shape[0], chunk):
        b_in, b_out = batch_bandwidth(instance, policy, A[lo : lo + chunk])
        out[lo : lo + chunk] = b_in.sum(axis=1) + b_out.sum(axis=1)
    return out


def saa_objective(instance: Instance, policy, samples) -> float:
    """Sample-average bandwidth over a list of request states."""
    A = np.atleast_2d(np.asarray(samples, dtype=int))
    if A.shape[0] == 0 or A.size == 0:
        raise ValueError("saa_objective needs at least one sample")
    return float(per_sample_totals(instance, policy, A).mean())


def request_states(instance: Instance, cap: int = EXACT_STATE_CAP) -> tuple[np.ndarray, np.ndarray]:
    """All request states with their probabilities (independent devices)."""
    F, K = instance.F, instance.K
    if F**K > cap:
        raise ValueError(f"{F}^{K} request states exceed the enumeration cap {cap}")
    states = np.array(list(itertools.product(range(F), repeat=K)), dtype=int).reshape(-1, K)
    probs = np.prod(instance.P[np.arange(K)[None, :], states], axis=1)
    return states, probs


def exact_average_bandwidth(instance: Instance, policy, cap: int = EXACT_STATE_CAP) -> float:
    """Expected bandwidth over the full request space (small K and F only)."""
    states, probs = request_states(instance, cap)
    return float(np.dot(probs, per_sample_totals(instance, policy, states)))


def unicast_bandwidth(instance: Instance, policy) -> float:
    """Average bandwidth when every device is served on its own unicast link."""
    x = _policy_array(policy)
    R = route_rates(instance)
    per = np.einsum("kf,kfj,kfj->k", instance.P, R, x)
    return float(np.dot(per, instance.s))


def write_breakdowns(path, breakdowns) -> None:
    """CSV rows ``sample_id, task_id, b_input_hz, b_output_hz``."""
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["sample_id", "task_id", "b_input_hz", "b_output_hz"])
        for n, bd in enumerate(breakdowns):
            for f, (bi, bo) in enumerate(zip(bd.input_hz, bd.output_hz)):
                wr.writerow([n, f, repr(float(bi)), repr(float(bo))])
