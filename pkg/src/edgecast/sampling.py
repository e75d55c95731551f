"""Popularity profiles and IRM request sampling.

Draws are counter based: the uniform variate for (device k, sample n) is the
(n mod 4)-th word of Philox block n // 4 under key (seed, k).  Any contiguous
slice of samples can therefore be generated independently and the result does
not depend on how the work is split.
"""

from __future__ import annotations

import csv

import numpy as np

from .instance import Instance


def zipf_popularity(F: int, gamma: float) -> np.ndarray:
    """p[f] proportional to (f + 1)^-gamma over ranks f = 0..F-1."""
    if F < 1 or gamma < 0:
        raise ValueError("need F >= 1 and gamma >= 0")
    weights = np.arange(1, F + 1, dtype=float) ** (-gamma)
    return weights / weights.sum()


def uniform_popularity(F: int) -> np.ndarray:
    return np.full(F, 1.0 / F)


def _uniforms(seed: int, device: int, start: int, count: int) -> np.ndarray:
    block0, offset = divmod(start, 4)
    nblocks = (offset + count + 3) // 4
    bitgen = np.random.Philox(key=np.array([seed, device], dtype=np.uint64), counter=np.array([block0, 0, 0, 0], dtype=np.uint64))
    raw = bitgen.random_raw(4 * nblocks)[offset : offset + count]
    return (raw >> np.uint64(11)).astype(np.float64) * 2.0**-53


def draw_from_demand(demand: np.ndarray, N: int, seed: int, start: int = 0) -> np.ndarray:
    """Request states for samples start..start+N-1, shape (N, K)."""
    P = np.atleast_2d(np.asarray(demand, dtype=float))
    K, F = P.shape
    out = np.empty((N, K), dtype=int)
    for k in range(K):
        cdf = np.cumsum(P[k])
        cdf[-1] = np.inf  # rounding in the cumulative sum must not leave a gap at 1
        u = _uniforms(seed, k, start, N)
        out[:, k] = np.searchsorted(cdf, u, side="right")
    return out


def draw_samples(instance: Instance, N: int, seed: int, start: int = 0) -> np.ndarray:
    """N i.i.d. request states from the instance's demand; deterministic in seed."""
    if N < 1:
        raise ValueError("N must be at least 1")
    return draw_from_demand(instance.P, N, seed, start)


def draw_samples_parallel(instance: Instance, N: int, seed: int, workers: int = 1, chunk: int = 4096) -> np.ndarray:
    """Same result as draw_samples, generated in chunks on a thread pool."""
    from concurrent.futures import ThreadPoolExecutor

    starts = list(range(0, N, chunk))
    with ThreadPoolExecutor(max_workers=workers) as pool:
        parts = list(pool.map(lambda s0: draw_from_demand(instance.P, min(chunk, N - s0), seed, s0), starts))
    return np.concatenate(parts, axis=0)


def save_samples(path, samples) -> None:
    A = np.atleast_2d(np.asarray(samples, dtype=int))
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["sample_id", "device_id", "task_id"])
        for n, row in enumerate(A):
            for k, f in enumerate(row):
                wr.writerow([n, k, int(f)])


def load_samples(path) -> np.ndarray:
    with open(path, newline="") as fh:
        rows = [(int(r["sample_id"]), int(r["device_id"]), int(r["task_id"])) for r in csv.DictReader(fh)]
    if not rows:
        raise ValueError(f"{path}: no samples")
    N = max(r[0] for r in rows) + 1
    K = max(r[1] for r in rows) + 1
    A = np.full((N, K), -1, dtype=int)
    for n, k, f in rows:
        A[n, k] = f
    if np.any(A < 0):
        raise ValueError(f"{path}: incomplete sample table")
    return A
