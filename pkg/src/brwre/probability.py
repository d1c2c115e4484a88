"""Probability of supercriticality: Monte Carlo estimate and analytic bounds.

The estimate samples environments and asks the spectral module whether a
positive eigenvalue exists.  Environment ``i`` of a run with seed ``s`` is
always drawn from ``derive_seed(s, 0, i)``; this makes runs at different
source intensities use common random numbers and lets the quadratic-form
bound reuse exactly the environments of the estimate.
"""

from __future__ import annotations

import itertools
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy import stats

from .criteria import (as_supercritical_condition, find_l_hat, quadratic_form_batch,
                       two_point_threshold)
from .env import EnvironmentSpec, derive_seed, sample_environment
from .errors import ConsistencyError
from .spectral import DEFAULT_HALF_WIDTH, POSITIVITY_TOL, has_positive_eigenvalue

ENV_STREAM = 0
PAIR_STREAM = 1
DEFAULT_A_GRID = (0.25, 0.5, 1.0, 2.0, 4.0)
MAX_HALF_WIDTH = 3200


def default_threads() -> int:
    return max(1, int(os.environ.get("BRW_THREADS", "1")))


def wilson_interval(k: int, n: int, confidence: float = 0.95) -> tuple[float, float]:
    ci = stats.binomtest(int(k), int(n)).proportion_ci(confidence_level=confidence,
                                                        method="wilson")
    return float(ci.low), float(ci.high)


@dataclass(frozen=True)
class ProbabilityEstimate:
    point: float
    ci_low: float
    ci_high: float
    n_samples: int
    n_indeterminate: int = 0
    confidence: float = 0.95

    @property
    def sigma(self) -> float:
        """Standard-error proxy: Wilson half-width divided by its normal quantile."""
        z = stats.norm.ppf(0.5 + self.confidence / 2)
        return (self.ci_high - self.ci_low) / (2 * z)

    def to_dict(self) -> dict:
        return asdict(self)


def proportion_estimate(k_pos: int, n: int, n_ind: int = 0,
                        confidence: float = 0.95) -> ProbabilityEstimate:
    """Fraction with a Wilson interval widened to cover every resolution of the
    ``n_ind`` undecided samples (all negative ... all positive)."""
    low, _ = wilson_interval(k_pos, n, confidence)
    _, high = wilson_interval(k_pos + n_ind, n, confidence)
    point = (k_pos + 0.5 * n_ind) / n
    return ProbabilityEstimate(point, min(low, point), max(high, point), n, n_ind, confidence)


def environment_seed(seed: int, i: int) -> int:
    return derive_seed(seed, ENV_STREAM, i)


def spectral_verdict(spec: EnvironmentSpec, env_seed: int,
                     half_width: int = DEFAULT_HALF_WIDTH, tol: float = POSITIVITY_TOL,
                     max_half_width: int = MAX_HALF_WIDTH) -> bool | None:
    """Verdict for one sampled environment, doubling the window while undecided."""
    L = half_width
    while True:
        verdict = has_positive_eigenvalue(sample_environment(spec, L, env_seed), spec, tol)
        if verdict is not None or 2 * L > max_half_width:
            return verdict
        L *= 2


def _map(fn, items, threads: int):
    if threads <= 1:
        return [fn(i) for i in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


def spectral_verdicts(spec: EnvironmentSpec, n_envs: int, seed: int,
                      half_width: int = DEFAULT_HALF_WIDTH, tol: float = POSITIVITY_TOL,
                      max_half_width: int = MAX_HALF_WIDTH, threads: int = 1) -> list:
    if spec.lambda_source == 0:
        return [False] * n_envs
    fn = lambda i: spectral_verdict(spec, environment_seed(seed, i), half_width, tol,
                                    max_half_width)
    return _map(fn, range(n_envs), threads)


def estimate_p_spectral(spec: EnvironmentSpec, n_envs: int, seed: int,
                        half_width: int = DEFAULT_HALF_WIDTH, tol: float = POSITIVITY_TOL,
                        confidence: float = 0.95, max_half_width: int = MAX_HALF_WIDTH,
                        threads: int = 1) -> ProbabilityEstimate:
    """Fraction of sampled environments with a positive eigenvalue."""
    if n_envs < 1:
        raise ValueError("n_envs must be >= 1")
    verdicts = spectral_verdicts(spec, n_envs, seed, half_width, tol, max_half_width, threads)
    k = sum(v is True for v in verdicts)
    n_ind = sum(v is None for v in verdicts)
    return proportion_estimate(k, n_envs, n_ind, confidence)


def upper_bound_thm2(spec: EnvironmentSpec, n_samples: int | None = None,
                     seed: int | None = None) -> float:
    """Probability that two i.i.d. neighbour killings still allow growth.

    Exact by enumeration for atomic laws; Monte Carlo over pairs otherwise
    (``n_samples`` and ``seed`` required then).
    """
    lam, kappa = spec.lambda_source, spec.kappa
    if spec.mu_dist.is_atomic or spec.c == 0:
        atoms = spec.mu_dist.atoms(spec.c)
        total = 0.0
        for (x1, p1), (x2, p2) in itertools.product(atoms, repeat=2):
            if lam > two_point_threshold(kappa, x1, x2):
                total += p1 * p2
        return min(1.0, total)
    if n_samples is None or seed is None:
        raise ValueError("continuous killing law: n_samples and seed are required")
    rng = np.random.default_rng(derive_seed(seed, PAIR_STREAM))
    xi = spec.mu_dist.sample(spec.c, (2, n_samples), rng)
    return float(np.mean(lam > two_point_threshold(kappa, xi[0], xi[1])))


def _sampled_killing(spec: EnvironmentSpec, n: int, seed: int, half_width: int) -> np.ndarray:
    return np.stack([sample_environment(spec, half_width, environment_seed(seed, i)).mu
                     for i in range(n)])


def _golden_max(f, lo: float, hi: float, iterations: int = 30) -> tuple[float, float]:
    # Golden-section probe of a piecewise-constant objective; keeps the best point seen.
    g = (math.sqrt(5) - 1) / 2
    best = max(((f(t), t) for t in (lo, hi)), key=lambda p: p[0])
    a, b = lo, hi
    c, d = b - g * (b - a), a + g * (b - a)
    fc, fd = f(c), f(d)
    for _ in range(iterations):
        best = max(best, (fc, c), (fd, d), key=lambda p: p[0])
        if fc >= fd:
            b, d, fd = d, c, fc
            c = b - g * (b - a)
            fc = f(c)
        else:
            a, c, fc = c, d, fd
            d = a + g * (b - a)
            fd = f(d)
    return best


def lower_bound_thm3(spec: EnvironmentSpec, a_grid=DEFAULT_A_GRID, n_samples: int = 2000,
                     seed: int = 0, half_width: int = 100,
                     refine: bool = True) -> tuple[float, float]:
    """``max_a P{(H psi_a, psi_a) > 0}`` over a grid of decay exponents.

    Returns ``(probability, best_a)``.  Environments are those of
    :func:`estimate_p_spectral` with the same seed.
    """
    a_grid = sorted(float(a) for a in a_grid)
    if not a_grid or a_grid[0] <= 0:
        raise ValueError("a_grid must be non-empty with positive entries")
    mu = _sampled_killing(spec, n_samples, seed, half_width)
    f = lambda a: float(np.mean(quadratic_form_batch(mu, spec, a) > 0))
    scores = [f(a) for a in a_grid]
    i = int(np.argmax(scores))
    best_p, best_a = scores[i], a_grid[i]
    if refine:
        lo = a_grid[i - 1] if i > 0 else a_grid[i] / 2
        hi = a_grid[i + 1] if i + 1 < len(a_grid) else a_grid[i] * 2
        p, a = _golden_max(f, lo, hi)
        if p > best_p:
            best_p, best_a = p, a
    return best_p, best_a


def lower_bound_thm4(spec: EnvironmentSpec, l_max: int = 60) -> tuple[float, int | None]:
    """``p0 ** (2 l_hat)`` with ``l_hat`` the smallest island radius that forces growth."""
    l_hat = find_l_hat(spec.lambda_source, spec.kappa, spec.c, l_max)
    if l_hat is None:
        return 0.0, None
    return spec.p0 ** (2 * l_hat), l_hat


@dataclass(frozen=True)
class BoundsConfig:
    n_envs: int = 2000
    seed: int = 0
    half_width: int = DEFAULT_HALF_WIDTH
    tol: float = POSITIVITY_TOL
    a_grid: tuple = DEFAULT_A_GRID
    thm3_half_width: int = 100
    n_pairs: int = 100_000
    l_max: int = 60
    confidence: float = 0.95
    threads: int = 1


@dataclass(frozen=True)
class BoundsReport:
    p_estimate: ProbabilityEstimate
    upper_thm2: float
    lower_thm3: float
    lower_thm3_best_a: float
    lower_thm4: float
    lower_thm4_l_hat: int | None
    as_condition: bool
    spec: EnvironmentSpec = field(repr=False, default=None)

    def to_dict(self) -> dict:
        return {
            "p_estimate": self.p_estimate.to_dict(),
            "upper_thm2": self.upper_thm2,
            "lower_thm3": self.lower_thm3,
            "lower_thm3_best_a": self.lower_thm3_best_a,
            "lower_thm4": self.lower_thm4,
            "lower_thm4_l_hat": self.lower_thm4_l_hat,
            "as_condition": self.as_condition,
        }

    def to_json(self) -> str:
        return json.dumps(self.to_dict())

    def csv_row(self) -> list:
        s, e = self.spec, self.p_estimate
        return [s.lambda_source, s.kappa, s.c, s.p0, e.point, e.ci_low, e.ci_high,
                self.upper_thm2, self.lower_thm3, self.lower_thm3_best_a, self.lower_thm4,
                "" if self.lower_thm4_l_hat is None else self.lower_thm4_l_hat]


CSV_HEADER = ["lambda", "kappa", "c", "p0", "estimate", "ci_low", "ci_high", "upper2",
              "lower3", "best_a", "lower4", "l_hat"]


def check_sandwich(report: BoundsReport, n_sigma: float = 3.0) -> None:
    e = report.p_estimate
    slack = n_sigma * e.sigma
    problems = []
    if report.lower_thm3 > e.point + slack:
        problems.append(f"lower_thm3={report.lower_thm3} > estimate {e.point} + {slack}")
    if report.lower_thm4 > e.point + slack:
        problems.append(f"lower_thm4={report.lower_thm4} > estimate {e.point} + {slack}")
    if e.point > report.upper_thm2 + slack:
        problems.append(f"estimate {e.point} > upper_thm2={report.upper_thm2} + {slack}")
    if report.as_condition and e.ci_high < 1.0:
        problems.append("almost-sure regime but estimate interval excludes 1")
    if problems:
        raise ConsistencyError("; ".join(problems))


def bounds_report(spec: EnvironmentSpec, config: BoundsConfig = BoundsConfig()) -> BoundsReport:
    """Estimate plus all bounds for one parameter set; the ordering is checked."""
    est = estimate_p_spectral(spec, config.n_envs, config.seed, config.half_width,
                              config.tol, config.confidence, threads=config.threads)
    upper = upper_bound_thm2(spec, config.n_pairs, config.seed)
    low3, best_a = lower_bound_thm3(spec, config.a_grid, config.n_envs, config.seed,
                                    config.thm3_half_width)
    low4, l_hat = lower_bound_thm4(spec, config.l_max)
    report = BoundsReport(est, upper, low3, best_a, low4, l_hat,
                          as_supercritical_condition(spec.lambda_source, spec.kappa, spec.c),
                          spec)
    check_sandwich(report)
    return report
