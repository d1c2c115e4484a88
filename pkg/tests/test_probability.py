import itertools
import json
import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy import stats

from brwre.criteria import two_point_threshold
from brwre.env import EnvironmentSpec, MuDistribution, sample_environment
from brwre.errors import ConsistencyError
from brwre.probability import (BoundsConfig, BoundsReport, CSV_HEADER, ProbabilityEstimate,
                               bounds_report, check_sandwich, environment_seed,
                               estimate_p_spectral, lower_bound_thm3, lower_bound_thm4,
                               proportion_estimate, spectral_verdicts, upper_bound_thm2,
                               wilson_interval)

BERNOULLI = MuDistribution.bernoulli(0.5)


def _wilson_by_hand(k, n, conf):
    z = stats.norm.ppf(0.5 + conf / 2)
    p = k / n
    centre = (p + z * z / (2 * n)) / (1 + z * z / n)
    half = z / (1 + z * z / n) * math.sqrt(p * (1 - p) / n + z * z / (4 * n * n))
    return centre - half, centre + half


@given(st.integers(1, 5000), st.floats(0, 1), st.sampled_from([0.9, 0.95, 0.99]))
def test_wilson_matches_formula(n, frac, conf):
    k = int(round(frac * n))
    lo, hi = wilson_interval(k, n, conf)
    elo, ehi = _wilson_by_hand(k, n, conf)
    assert abs(lo - max(elo, 0.0)) < 1e-10 and abs(hi - min(ehi, 1.0)) < 1e-10


@given(st.integers(1, 500), st.floats(0, 1), st.floats(0, 1))
def test_estimate_interval_contains_point(n, f1, f2):
    k = int(f1 * n)
    n_ind = int(f2 * (n - k))
    e = proportion_estimate(k, n, n_ind)
    assert e.ci_low <= e.point <= e.ci_high
    assert e.n_indeterminate == n_ind
    assert e.sigma >= 0


def test_indeterminate_widens_interval():
    plain = proportion_estimate(50, 200)
    wide = proportion_estimate(50, 200, 20)
    assert wide.ci_low == plain.ci_low
    assert wide.ci_high > proportion_estimate(60, 200).ci_high


def test_estimate_examples():
    spec = EnvironmentSpec(2.0, 1.0, 1.0, BERNOULLI)
    e = estimate_p_spectral(spec, 200, seed=3)
    assert e.point == 1.0 and e.n_indeterminate == 0
    assert estimate_p_spectral(spec.with_lambda(0.0), 200, seed=3).point == 0.0
    with pytest.raises(ValueError):
        estimate_p_spectral(spec, 0, seed=3)


# Golden value recorded after the first verified run (kappa = c = 1, Lambda = 0.4).
GOLDEN_P_04 = (356, 2000)


def test_golden_estimate_and_sandwich(bernoulli_spec):
    e = estimate_p_spectral(bernoulli_spec, 2000, seed=1)
    assert e.n_indeterminate == 0
    assert (round(e.point * e.n_samples), e.n_samples) == GOLDEN_P_04
    low3, _ = lower_bound_thm3(bernoulli_spec, n_samples=2000, seed=1)
    low4, _ = lower_bound_thm4(bernoulli_spec)
    upper = upper_bound_thm2(bernoulli_spec)
    assert max(low3, low4) - 3 * e.sigma <= e.point <= upper + 3 * e.sigma


def test_estimate_deterministic_any_thread_count(bernoulli_spec):
    a = estimate_p_spectral(bernoulli_spec, 150, seed=9, threads=1)
    b = estimate_p_spectral(bernoulli_spec, 150, seed=9, threads=4)
    assert a == b


def test_monotone_in_lambda_under_common_numbers():
    spec = EnvironmentSpec(0.1, 1.0, 1.0, BERNOULLI)
    counts = []
    prev = None
    for lam in np.linspace(0.1, 0.8, 8):
        v = spectral_verdicts(spec.with_lambda(lam), 300, seed=4)
        assert None not in v
        if prev is not None:
            # Per environment, growth at a smaller source implies growth at a larger one.
            assert all(b or not a for a, b in zip(prev, v))
        prev = v
        counts.append(sum(v))
    assert counts == sorted(counts)


def test_upper_bound_examples():
    zero = EnvironmentSpec(0.3, 1.0, 1.0, MuDistribution(1.0, 0.0, 0.0))
    assert upper_bound_thm2(zero) == 1.0
    kappa, c = 2.0, 1.0
    thr = 2 * c / (1 + 2 * c / kappa)
    at_c = MuDistribution(0.0, 1.0, 0.0)
    assert upper_bound_thm2(EnvironmentSpec(thr + 0.01, kappa, c, at_c)) == 1.0
    assert upper_bound_thm2(EnvironmentSpec(thr - 0.01, kappa, c, at_c)) == 0.0


@given(st.floats(0, 1), st.floats(0.01, 3), st.floats(0.2, 3), st.floats(0.01, 3))
def test_upper_bound_enumeration(p0, lam, kappa, c):
    spec = EnvironmentSpec(lam, kappa, c, MuDistribution.bernoulli(p0))
    vals = [(0.0, p0), (c, 1 - p0)]
    expect = sum(pa * pb for (xa, pa), (xb, pb) in itertools.product(vals, repeat=2)
                 if lam > two_point_threshold(kappa, xa, xb))
    assert abs(upper_bound_thm2(spec) - expect) < 1e-12


def test_bernoulli_upper_bound_steps():
    # kappa = c = 1, p0 = 1/2: mixed pairs switch on at 1/3, the (c, c) pair at 2/3.
    spec = EnvironmentSpec(0.0, 1.0, 1.0, BERNOULLI)
    assert upper_bound_thm2(spec.with_lambda(0.2)) == 0.25
    assert upper_bound_thm2(spec.with_lambda(0.5)) == 0.75
    assert upper_bound_thm2(spec.with_lambda(0.7)) == 1.0


def test_upper_bound_continuous_monte_carlo():
    spec = EnvironmentSpec(0.6, 1.0, 1.0, MuDistribution(0.2, 0.2, 0.6))
    with pytest.raises(ValueError):
        upper_bound_thm2(spec)
    mc = upper_bound_thm2(spec, n_samples=200_000, seed=2)
    # Independent oracle: numerical double integral over the mixture.
    atoms = [(0.0, 0.2), (1.0, 0.2)]
    grid = (np.arange(4000) + 0.5) / 4000
    pts = [(x, w) for x, w in atoms] + [(g, 0.6 / 4000) for g in grid]
    xs = np.array([p[0] for p in pts])
    ws = np.array([p[1] for p in pts])
    X, Y = np.meshgrid(xs, xs)
    exact = float(np.sum(np.outer(ws, ws) * (0.6 > two_point_threshold(1.0, X, Y))))
    assert abs(mc - exact) < 4 * math.sqrt(exact * (1 - exact) / 200_000) + 1e-3


def test_lower_thm3_examples():
    zero = EnvironmentSpec(0.5, 1.0, 1.0, MuDistribution(1.0, 0.0, 0.0))
    p, a = lower_bound_thm3(zero, a_grid=(1.0,), n_samples=50, refine=False)
    assert p == 1.0
    p, _ = lower_bound_thm3(EnvironmentSpec(0.0, 1.0, 1.0, BERNOULLI), n_samples=100)
    assert p == 0.0
    with pytest.raises(ValueError):
        lower_bound_thm3(zero, a_grid=(), n_samples=10)
    with pytest.raises(ValueError):
        lower_bound_thm3(zero, a_grid=(0.0, 1.0), n_samples=10)


def test_lower_thm3_grid_enlargement_never_hurts(bernoulli_spec):
    small, _ = lower_bound_thm3(bernoulli_spec, (0.5, 1.0), 500, seed=3, refine=False)
    big, _ = lower_bound_thm3(bernoulli_spec, (0.5, 1.0, 2.0, 4.0), 500, seed=3, refine=False)
    refined, _ = lower_bound_thm3(bernoulli_spec, (0.5, 1.0, 2.0, 4.0), 500, seed=3)
    assert small <= big <= refined


def test_lower_thm3_uses_estimate_environments(bernoulli_spec):
    from brwre.criteria import quadratic_form
    p, a = lower_bound_thm3(bernoulli_spec, (1.0,), 40, seed=5, half_width=100, refine=False)
    manual = np.mean([quadratic_form(sample_environment(bernoulli_spec, 100,
                                                        environment_seed(5, i)),
                                     bernoulli_spec, 1.0) > 0 for i in range(40)])
    assert p == manual


def test_lower_thm4_examples():
    assert lower_bound_thm4(EnvironmentSpec(2.0, 1.0, 1.0, BERNOULLI)) == (1.0, 0)
    assert lower_bound_thm4(EnvironmentSpec(0.4, 1.0, 1.0, MuDistribution(0.0, 1.0, 0.0))) == (0.0, 2)
    assert lower_bound_thm4(EnvironmentSpec(0.4, 1.0, 1.0, BERNOULLI)) == (0.0625, 2)
    assert lower_bound_thm4(EnvironmentSpec(0.0, 1.0, 1.0, BERNOULLI)) == (0.0, None)


def test_bounds_report_as_regime():
    spec = EnvironmentSpec(1.0, 1.0, 1.0, BERNOULLI)
    r = bounds_report(spec, BoundsConfig(n_envs=200, seed=1, n_pairs=1000))
    assert r.as_condition
    assert r.p_estimate.point == 1.0
    assert r.upper_thm2 == r.lower_thm3 == r.lower_thm4 == 1.0


def test_bounds_report_zero_source():
    spec = EnvironmentSpec(0.0, 1.0, 1.0, BERNOULLI)
    r = bounds_report(spec, BoundsConfig(n_envs=200, seed=1))
    assert r.p_estimate.point == 0.0 and r.lower_thm3 == 0.0 and r.lower_thm4 == 0.0


def test_bounds_report_serialization(bernoulli_spec):
    r = bounds_report(bernoulli_spec, BoundsConfig(n_envs=300, seed=2))
    d = json.loads(r.to_json())
    assert set(d) == {"p_estimate", "upper_thm2", "lower_thm3", "lower_thm3_best_a",
                      "lower_thm4", "lower_thm4_l_hat", "as_condition"}
    assert CSV_HEADER == ["lambda", "kappa", "c", "p0", "estimate", "ci_low", "ci_high",
                          "upper2", "lower3", "best_a", "lower4", "l_hat"]
    row = r.csv_row()
    assert len(row) == len(CSV_HEADER) and row[0] == 0.4 and row[-1] == 2


def test_sandwich_violation_raises():
    est = ProbabilityEstimate(0.1, 0.09, 0.11, 2000)
    bad = BoundsReport(est, upper_thm2=0.05, lower_thm3=0.0, lower_thm3_best_a=1.0,
                       lower_thm4=0.0, lower_thm4_l_hat=None, as_condition=False)
    with pytest.raises(ConsistencyError):
        check_sandwich(bad)
    bad = BoundsReport(est, 1.0, 0.5, 1.0, 0.0, None, False)
    with pytest.raises(ConsistencyError):
        check_sandwich(bad)
