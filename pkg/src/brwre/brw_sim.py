"""Exact event-driven simulation of the branching walk in a fixed environment.

Particles are aggregated per site.  With ``n(x)`` particles at ``x`` the
next event happens after an exponential time with rate
``sum_x n(x) r(x)``, where ``r(0) = kappa + Lambda`` and
``r(x) = kappa + mu(x)`` otherwise; the site is chosen proportionally to
``n(x) r(x)``, then the event type by rate shares (split at the origin,
death elsewhere, otherwise a jump to a uniformly chosen neighbour).
Particles jumping out of the window are removed.

Every replica reseeds its own generator from a derived seed, so results do
not depend on how replicas are scheduled over threads.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numba
import numpy as np

from .env import EnvironmentSpec, EnvironmentWindow, derive_seed
from .evolver import fit_log_slope

REPLICA_STREAM = 2
DEFAULT_CAP = 1_000_000


@numba.njit(cache=True, nogil=True)
def _run(rate, p_special, origin, start, seeds, times, cap, n_keep,
         sums, sumsq, n_alive, kept, aborted_at):
    n_sites = rate.shape[0]
    n_times = times.shape[0]
    counts = np.zeros(n_sites, np.int64)
    for rep in range(seeds.shape[0]):
        np.random.seed(seeds[rep])
        counts[:] = 0
        counts[start] = 1
        total = 1
        R = rate[start]
        lo = start
        hi = start
        t = 0.0
        ti = 0
        events = 0
        aborted = False
        while ti < n_times:
            if total == 0:
                t_next = np.inf
            else:
                t_next = t - math.log(1.0 - np.random.random()) / R
            while ti < n_times and times[ti] < t_next:
                for x in range(lo, hi + 1):
                    c = counts[x]
                    sums[ti, x] += c
                    sumsq[ti, x] += c * c
                if rep < n_keep:
                    for x in range(lo, hi + 1):
                        kept[rep, ti, x] = counts[x]
                n_alive[ti] += 1
                ti += 1
            if ti >= n_times:
                break
            t = t_next
            # pick the site of the event
            u = np.random.random() * R
            acc = 0.0
            site = -1
            for x in range(lo, hi + 1):
                if counts[x] > 0:
                    site = x
                    acc += counts[x] * rate[x]
                    if u < acc:
                        break
            if np.random.random() < p_special[site]:
                if site == origin:
                    counts[site] += 1
                    total += 1
                    R += rate[site]
                else:
                    counts[site] -= 1
                    total -= 1
                    R -= rate[site]
            else:
                counts[site] -= 1
                R -= rate[site]
                dest = site + 1 if np.random.random() < 0.5 else site - 1
                if 0 <= dest < n_sites:
                    counts[dest] += 1
                    R += rate[dest]
                    if dest < lo:
                        lo = dest
                    if dest > hi:
                        hi = dest
                else:
                    total -= 1
            while lo < hi and counts[lo] == 0:
                lo += 1
            while hi > lo and counts[hi] == 0:
                hi -= 1
            events += 1
            if events % 4096 == 0:
                R = 0.0
                for x in range(lo, hi + 1):
                    R += counts[x] * rate[x]
            if total > cap:
                aborted = True
                break
        aborted_at[rep] = t if aborted else -1.0


@dataclass(frozen=True, eq=False)
class ParticleState:
    counts: np.ndarray      # indexed like the window, site x at x + L
    time: float
    total: int
    aborted: bool
    half_width: int

    def count_map(self) -> dict:
        L = self.half_width
        return {int(i - L): int(c) for i, c in enumerate(self.counts) if c}


@dataclass(frozen=True, eq=False)
class ReplicaSummary:
    """Replica averages of site counts on a time grid."""

    times: np.ndarray
    mean: np.ndarray        # (n_times, 2L + 1)
    stderr: np.ndarray
    n_alive: np.ndarray     # replicas not aborted at each time
    n_replicas: int
    n_aborted: int
    half_width: int
    kept: np.ndarray        # (n_keep, n_times, 2L + 1) raw counts of the first replicas

    def site_mean(self, x: int) -> np.ndarray:
        return self.mean[:, x + self.half_width]

    def site_stderr(self, x: int) -> np.ndarray:
        return self.stderr[:, x + self.half_width]

    def aggregate_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "site", "mean", "stderr", "n_alive"])
        L = self.half_width
        for ti, t in enumerate(self.times):
            for i in range(2 * L + 1):
                w.writerow([format(t, ".17g"), i - L, format(self.mean[ti, i], ".17g"),
                            format(self.stderr[ti, i], ".17g"), int(self.n_alive[ti])])
        return buf.getvalue()

    def replica_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["replica", "t", "site", "count"])
        L = self.half_width
        for r in range(self.kept.shape[0]):
            for ti, t in enumerate(self.times):
                for i in np.flatnonzero(self.kept[r, ti]):
                    w.writerow([r, format(t, ".17g"), int(i) - L, int(self.kept[r, ti, i])])
        return buf.getvalue()


def _rates(window: EnvironmentWindow, spec: EnvironmentSpec):
    rate = spec.kappa + window.mu.astype(float)
    special = np.divide(window.mu, rate, out=np.zeros_like(rate), where=rate > 0)
    o = window.origin
    rate[o] = spec.kappa + spec.lambda_source
    special[o] = spec.lambda_source / rate[o] if rate[o] > 0 else 0.0
    return rate, special


def replica_seeds(seed: int, n_replicas: int) -> np.ndarray:
    return np.array([derive_seed(seed, REPLICA_STREAM, i) & 0xFFFFFFFF
                     for i in range(n_replicas)], dtype=np.int64)


def run_replicas(window: EnvironmentWindow, spec: EnvironmentSpec, times, n_replicas: int,
                 seed: int, start: int = 0, cap: int = DEFAULT_CAP, n_keep: int = 0,
                 threads: int = 1) -> ReplicaSummary:
    """Simulate independent replicas and reduce them to per-site means."""
    times = np.asarray(times, dtype=float)
    if np.any(np.diff(times) < 0):
        raise ValueError("times must be non-decreasing")
    if cap < 1:
        raise ValueError("cap must be >= 1")
    rate, special = _rates(window, spec)
    n_sites = rate.shape[0]
    seeds = replica_seeds(seed, n_replicas)
    n_keep = min(n_keep, n_replicas)
    chunks = np.array_split(np.arange(n_replicas), max(1, min(threads, n_replicas)))

    def work(idx):
        sums = np.zeros((len(times), n_sites), np.int64)
        sumsq = np.zeros_like(sums)
        n_alive = np.zeros(len(times), np.int64)
        keep_here = max(0, min(n_keep - int(idx[0]), len(idx))) if len(idx) else 0
        kept = np.zeros((keep_here, len(times), n_sites), np.int64)
        aborted_at = np.empty(len(idx))
        _run(rate, special, window.origin, window.index(start), seeds[idx], times,
             int(cap), keep_here, sums, sumsq, n_alive, kept, aborted_at)
        return sums, sumsq, n_alive, kept, aborted_at

    if len(chunks) == 1:
        parts = [work(chunks[0])]
    else:
        with ThreadPoolExecutor(max_workers=len(chunks)) as pool:
            parts = list(pool.map(work, chunks))
    sums = sum(p[0] for p in parts)
    sumsq = sum(p[1] for p in parts)
    n_alive = sum(p[2] for p in parts)
    kept = np.concatenate([p[3] for p in parts], axis=0)
    n_aborted = int(sum(int(np.sum(p[4] >= 0)) for p in parts))
    n = np.maximum(n_alive, 1)[:, None].astype(float)
    mean = sums / n
    var = np.maximum(sumsq / n - mean ** 2, 0.0) * n / np.maximum(n - 1, 1)
    stderr = np.sqrt(var / n)
    return ReplicaSummary(times, mean, stderr, n_alive, n_replicas, n_aborted,
                          window.half_width, kept)


def simulate(window: EnvironmentWindow, spec: EnvironmentSpec, t_end: float, seed: int,
             cap: int = DEFAULT_CAP, start: int = 0, n_times: int = 101) -> list[ParticleState]:
    """One replica observed on an even time grid over ``[0, t_end]``."""
    times = np.linspace(0.0, t_end, n_times)
    rate, special = _rates(window, spec)
    n_sites = rate.shape[0]
    sums = np.zeros((n_times, n_sites), np.int64)
    sumsq = np.zeros_like(sums)
    n_alive = np.zeros(n_times, np.int64)
    kept = np.zeros((1, n_times, n_sites), np.int64)
    aborted_at = np.empty(1)
    seeds = np.array([derive_seed(seed, REPLICA_STREAM, 0) & 0xFFFFFFFF], dtype=np.int64)
    _run(rate, special, window.origin, window.index(start), seeds, times, int(cap), 1,
         sums, sumsq, n_alive, kept, aborted_at)
    states = []
    for ti, t in enumerate(times):
        if n_alive[ti] == 0:
            states.append(ParticleState(kept[0, ti - 1].copy() if ti else kept[0, 0].copy(),
                                        float(aborted_at[0]), int(kept[0, ti - 1].sum()),
                                        True, window.half_width))
            break
        states.append(ParticleState(kept[0, ti].copy(), float(t), int(kept[0, ti].sum()),
                                    False, window.half_width))
    return states


def empirical_growth_rate(spec: EnvironmentSpec, window: EnvironmentWindow, n_replicas: int,
                          t_end: float, seed: int, cap: int = DEFAULT_CAP, n_times: int = 101,
                          site: int = 0, threads: int = 1) -> float:
    """Slope of the log replica-mean count at ``site`` over the last 30% of ``[0, t_end]``."""
    times = np.linspace(0.0, t_end, n_times)
    summary = run_replicas(window, spec, times, n_replicas, seed, start=site, cap=cap,
                           threads=threads)
    return fit_log_slope(times, summary.site_mean(site))
