"""Seeding, deterministic chunked Monte Carlo, and small statistics helpers.

All experiment drivers split work into fixed-size chunks whose RNG streams are
spawned from the master seed by chunk index.  Results are folded in chunk-index
order, so reported statistics are independent of the number of worker threads.
"""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np
from scipy.special import kolmogorov


def master_seed_sequence(seed: int) -> np.random.SeedSequence:
    return np.random.SeedSequence(seed)


def chunk_generators(seed: int, n_chunks: int) -> list[np.random.Generator]:
    """One independent generator per chunk, reproducible from the master seed."""
    children = master_seed_sequence(seed).spawn(n_chunks)
    return [np.random.default_rng(s) for s in children]


def run_chunks(fn: Callable[[int, np.random.Generator], object],
               seed: int, n_chunks: int, threads: int = 1) -> list:
    """Evaluate ``fn(chunk_index, rng)`` per chunk; results in chunk order.

    Thread count changes wall time only, never the folded result.
    """
    gens = chunk_generators(seed, n_chunks)
    if threads <= 1:
        return [fn(i, gens[i]) for i in range(n_chunks)]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        futures = [pool.submit(fn, i, gens[i]) for i in range(n_chunks)]
        return [f.result() for f in futures]


def split_sizes(total: int, chunk: int) -> list[int]:
    sizes = [chunk] * (total // chunk)
    if total % chunk:
        sizes.append(total % chunk)
    return sizes


@dataclass(frozen=True)
class BinomialCI:
    estimate: float
    lo: float
    hi: float
    n: int

    def width(self) -> float:
        return self.hi - self.lo


def wilson_ci(successes: int, n: int, z: float = 1.959963984540054) -> BinomialCI:
    """Wilson score interval; sane at the 0 and 1 boundaries."""
    if n <= 0:
        raise ValueError("need n > 0")
    p = successes / n
    denom = 1.0 + z * z / n
    centre = (p + z * z / (2 * n)) / denom
    half = z * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n)) / denom
    return BinomialCI(p, max(0.0, centre - half), min(1.0, centre + half), n)


def ks_statistic(samples: np.ndarray, cdf: Callable[[np.ndarray], np.ndarray]) -> float:
    """One-sample Kolmogorov-Smirnov statistic against a continuous CDF."""
    x = np.sort(np.asarray(samples, dtype=float))
    n = len(x)
    f = cdf(x)
    grid = np.arange(1, n + 1) / n
    return float(max(np.max(grid - f), np.max(f - (grid - 1.0 / n))))


def ks_pvalue(d: float, n: int) -> float:
    """Asymptotic p-value for the one-sample KS statistic."""
    en = math.sqrt(n)
    return float(kolmogorov((en + 0.12 + 0.11 / en) * d))


def two_sample_ks(a: np.ndarray, b: np.ndarray) -> float:
    """Two-sample KS statistic (sup distance of the empirical CDFs)."""
    a = np.sort(np.asarray(a, float))
    b = np.sort(np.asarray(b, float))
    allv = np.concatenate([a, b])
    ca = np.searchsorted(a, allv, side="right") / len(a)
    cb = np.searchsorted(b, allv, side="right") / len(b)
    return float(np.max(np.abs(ca - cb)))


def normal_cdf(x: np.ndarray, sigma: float) -> np.ndarray:
    from scipy.special import erf
    return 0.5 * (1.0 + erf(np.asarray(x) / (sigma * math.sqrt(2.0))))


def total_variation(counts_a: dict, counts_b: dict) -> float:
    """TV distance between two empirical distributions given as count dicts."""
    na = sum(counts_a.values())
    nb = sum(counts_b.values())
    keys = set(counts_a) | set(counts_b)
    return 0.5 * sum(abs(counts_a.get(k, 0) / na - counts_b.get(k, 0) / nb) for k in keys)


def fold_sum(values: Sequence[float]) -> float:
    """Order-fixed compensated summation of per-chunk results."""
    return math.fsum(values)
