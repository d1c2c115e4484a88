import json
from concurrent.futures import ThreadPoolExecutor

import numpy as np
import pytest
from hypothesis import given, strategies as st

from brwre.env import (EnvironmentSpec, EnvironmentWindow, MuDistribution, constant_environment,
                       derive_seed, island_environment, potential, potential_array,
                       sample_environment, two_point_environment)
from brwre.errors import ConfigurationError


def test_degenerate_atom_at_zero():
    spec = EnvironmentSpec(1.0, 1.0, 1.0, MuDistribution(1.0, 0.0, 0.0))
    w = sample_environment(spec, 50, seed=3)
    assert np.all(w.mu == 0.0)


def test_degenerate_atom_at_c():
    spec = EnvironmentSpec(1.0, 1.0, 0.5, MuDistribution(0.0, 1.0, 0.0))
    w = sample_environment(spec, 50, seed=3)
    off = np.delete(w.mu, w.origin)
    assert np.all(off == 0.5)
    assert w.mu[w.origin] == 0.0


# Recorded from the first run; x = -20..-1 then 1..20.
GOLDEN_BERNOULLI_SEED_2024 = [0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 0, 1, 0, 1, 0, 1, 1, 0, 1,
                              0, 1, 1, 1, 1, 0, 1, 0, 1, 1, 0, 1, 1, 0, 1, 1, 0, 0, 1, 0]


def test_bernoulli_window_is_reproducible(bernoulli_spec):
    a = sample_environment(bernoulli_spec, 20, seed=2024)
    b = sample_environment(bernoulli_spec, 20, seed=2024)
    assert np.array_equal(a.mu, b.mu)
    assert set(np.unique(a.mu)) <= {0.0, 1.0}
    assert [a.mu_at(x) for x in range(-20, 21) if x] == GOLDEN_BERNOULLI_SEED_2024
    c = sample_environment(bernoulli_spec, 20, seed=2025)
    assert not np.array_equal(a.mu, c.mu)


def test_sampling_independent_of_threads(mixed_spec):
    seeds = list(range(16))
    serial = [sample_environment(mixed_spec, 30, s).mu for s in seeds]
    with ThreadPoolExecutor(4) as pool:
        parallel = list(pool.map(lambda s: sample_environment(mixed_spec, 30, s).mu,
                                 reversed(seeds)))
    for x, y in zip(serial, reversed(parallel)):
        assert np.array_equal(x, y)


@given(st.integers(1, 60), st.integers(1, 60), st.integers(0, 2**63 - 1))
def test_shared_sites_agree_across_widths(l1, l2, seed):
    spec = EnvironmentSpec(1.0, 1.0, 2.0, MuDistribution(0.2, 0.3, 0.5))
    small, big = sorted((l1, l2))
    a = sample_environment(spec, small, seed)
    b = sample_environment(spec, big, seed)
    assert np.array_equal(a.mu, b.restrict(small).mu)


@given(st.floats(0, 1), st.floats(0, 1), st.sampled_from(["uniform", "beta"]),
       st.floats(0.01, 5.0), st.integers(0, 10**6))
def test_samples_lie_in_support(p0, frac, family, c, seed):
    pc = (1 - p0) * frac
    dist = MuDistribution(p0, pc, 1.0 - p0 - pc, family, 2.0, 0.5)
    w = sample_environment(EnvironmentSpec(0.0, 1.0, c, dist), 25, seed)
    assert np.all((w.mu >= 0) & (w.mu <= c))
    assert w.mu[w.origin] == 0.0


def test_atom_mass_within_four_standard_errors():
    p0 = 0.37
    spec = EnvironmentSpec(1.0, 1.0, 1.0, MuDistribution(p0, 0.2, 0.43))
    L = 50_000
    w = sample_environment(spec, L, seed=99)
    off = np.delete(w.mu, w.origin)
    assert off.size == 100_000
    se = np.sqrt(p0 * (1 - p0) / off.size)
    assert abs(np.mean(off == 0.0) - p0) < 4 * se


def test_beta_part_has_the_right_mean():
    # Scaled beta(2, 5) on [0, 3] has mean 3 * 2/7.
    spec = EnvironmentSpec(1.0, 1.0, 3.0, MuDistribution(0.0, 0.0, 1.0, "beta", 2.0, 5.0))
    off = np.delete(sample_environment(spec, 20_000, 5).mu, 20_000)
    se = off.std() / np.sqrt(off.size)
    assert abs(off.mean() - 6 / 7) < 4 * se


@pytest.mark.parametrize("weights", [(0.5, 0.6, 0.0), (-0.1, 1.1, 0.0), (0.3, 0.3, 0.3)])
def test_bad_weights_rejected(weights):
    with pytest.raises(ConfigurationError):
        MuDistribution(*weights)


def test_bad_family_and_spec_rejected():
    with pytest.raises(ConfigurationError):
        MuDistribution(0.0, 0.0, 1.0, "gamma")
    with pytest.raises(ConfigurationError):
        MuDistribution(0.0, 0.0, 1.0, "beta", 0.0, 1.0)
    with pytest.raises(ConfigurationError):
        EnvironmentSpec(1.0, 0.0, 1.0)
    with pytest.raises(ConfigurationError):
        EnvironmentSpec(-1.0, 1.0, 1.0)
    with pytest.raises(ConfigurationError):
        EnvironmentSpec(1.0, 1.0, -0.5)


def test_half_width_must_be_positive(bernoulli_spec):
    with pytest.raises(ValueError):
        sample_environment(bernoulli_spec, 0, 1)


def test_constant_environment():
    assert np.all(constant_environment(0.0, 7).mu == 0)
    w = constant_environment(0.3, 5)
    assert w.mu.size == 11
    assert [w.mu_at(x) for x in (-5, -1, 1, 5)] == [0.3] * 4
    assert np.count_nonzero(w.mu == 0.3) == 10
    with pytest.raises(ValueError):
        constant_environment(-1.0, 5)


def test_two_point_environment():
    assert np.all(two_point_environment(0, 0, 4).mu == 0)
    w = two_point_environment(1, 1, 4)
    assert {x: w.mu_at(x) for x in range(-4, 5) if x and w.mu_at(x)} == {-1: 1.0, 1: 1.0}
    w = two_point_environment(0, 2, 4)
    assert w.mu_at(1) == 0 and w.mu_at(-1) == 2
    assert all(w.mu_at(x) == 0 for x in (-4, -3, -2, 2, 3, 4))


def test_island_environment():
    w = island_environment(2, 1.0, 5)
    expect = {x: (0.0 if abs(x) <= 2 else 1.0) for x in range(-5, 6) if x}
    assert {x: w.mu_at(x) for x in expect} == expect
    w0 = island_environment(0, 1.5, 5)
    assert all(w0.mu_at(x) == 1.5 for x in range(-5, 6) if x)
    edge = island_environment(4, 1.0, 5)
    assert [x for x in range(-5, 6) if x and edge.mu_at(x) > 0] == [-5, 5]
    with pytest.raises(ValueError):
        island_environment(5, 1.0, 5)


def test_potential():
    spec = EnvironmentSpec(1.7, 1.0, 1.0)
    w = constant_environment(0.5, 6)
    assert potential(w, spec, 0) == 1.7
    assert potential(w, spec, 3) == -0.5
    assert potential(two_point_environment(1, 0, 3), spec, 1) == -1.0
    with pytest.raises(ValueError):
        potential(w, spec, 7)


@given(st.integers(0, 10**9), st.floats(0, 3))
def test_potential_sign_pattern(seed, lam):
    spec = EnvironmentSpec(lam, 1.0, 2.0, MuDistribution(0.2, 0.2, 0.6))
    w = sample_environment(spec, 15, seed)
    V = potential_array(w, spec)
    assert V[w.origin] == lam
    assert np.all(np.delete(V, w.origin) <= 0)


def test_window_json_format_and_roundtrip(mixed_spec):
    w = sample_environment(mixed_spec, 4, seed=12)
    data = json.loads(w.to_json())
    assert set(data) == {"half_width", "seed", "mu"}
    assert data["half_width"] == 4 and data["seed"] == 12
    assert len(data["mu"]) == 8
    expected = [w.mu_at(x) for x in (-4, -3, -2, -1, 1, 2, 3, 4)]
    assert data["mu"] == expected
    back = EnvironmentWindow.from_json(w.to_json())
    assert back == w and back.seed == 12


def test_window_json_rejects_wrong_length():
    with pytest.raises(ConfigurationError):
        EnvironmentWindow.from_json(json.dumps({"half_width": 3, "seed": 1, "mu": [0.0] * 5}))


def test_window_is_read_only(mixed_spec):
    w = sample_environment(mixed_spec, 4, seed=1)
    with pytest.raises(ValueError):
        w.mu[0] = 5.0


def test_derive_seed_is_stable_and_distinct():
    assert derive_seed(7, 0, 1) == derive_seed(7, 0, 1)
    keys = {derive_seed(7, 0, i) for i in range(1000)}
    assert len(keys) == 1000
    assert derive_seed(7, 0, 1) != derive_seed(7, 1, 0)
