"""Random killing environment and the potential of the branching walk.

A realized environment is stored as an :class:`EnvironmentWindow`: a dense
array of killing rates over the sites ``-L..L`` of the lattice.  The origin
carries no killing rate (it is the reproduction source); its slot in the
dense array is kept at ``0.0`` and never read as a rate.

Random windows are drawn from a counter-based stream: the value at site
``x`` depends only on ``(seed, x)``, so windows of different widths sampled
with the same seed agree on every shared site, and the result does not
depend on evaluation order.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field

import numpy as np
from scipy import stats

from .errors import ConfigurationError

_WEIGHT_TOL = 1e-12
_DRAWS_PER_SITE = 2


@dataclass(frozen=True)
class MuDistribution:
    """Law of a single killing rate: atom at 0, atom at ``c``, continuous part.

    The continuous part lives on ``[0, c]`` and is either ``"uniform"`` or a
    scaled ``"beta"`` with shape parameters ``beta_a``, ``beta_b``.
    """

    atom_at_zero_prob: float = 0.5
    atom_at_c_prob: float = 0.5
    continuous_weight: float = 0.0
    continuous_density: str = "uniform"
    beta_a: float = 1.0
    beta_b: float = 1.0

    def __post_init__(self):
        weights = (self.atom_at_zero_prob, self.atom_at_c_prob, self.continuous_weight)
        if any(not (0.0 <= w <= 1.0) for w in weights):
            raise ConfigurationError(f"mixture weights must lie in [0, 1], got {weights}")
        if abs(sum(weights) - 1.0) > _WEIGHT_TOL:
            raise ConfigurationError(f"mixture weights must sum to 1, got {sum(weights)!r}")
        if self.continuous_density not in ("uniform", "beta"):
            raise ConfigurationError(
                f"unsupported continuous density {self.continuous_density!r}")
        if self.continuous_density == "beta" and not (self.beta_a > 0 and self.beta_b > 0):
            raise ConfigurationError("beta shape parameters must be positive")

    @classmethod
    def bernoulli(cls, p0: float) -> "MuDistribution":
        """Two atoms: 0 with probability ``p0``, ``c`` otherwise."""
        return cls(atom_at_zero_prob=p0, atom_at_c_prob=1.0 - p0, continuous_weight=0.0)

    @property
    def is_atomic(self) -> bool:
        return self.continuous_weight == 0.0

    def atoms(self, c: float) -> list[tuple[float, float]]:
        """``(value, probability)`` pairs of the atomic part, zero-mass atoms dropped."""
        out = []
        if c == 0.0:
            mass = self.atom_at_zero_prob + self.atom_at_c_prob
            return [(0.0, mass)] if mass > 0 else []
        if self.atom_at_zero_prob > 0:
            out.append((0.0, self.atom_at_zero_prob))
        if self.atom_at_c_prob > 0:
            out.append((c, self.atom_at_c_prob))
        return out

    def transform(self, u_component, u_value, c: float) -> np.ndarray:
        """Map two independent uniforms per draw to killing rates in ``[0, c]``."""
        u_component = np.asarray(u_component, dtype=float)
        u_value = np.asarray(u_value, dtype=float)
        if self.continuous_density == "uniform":
            cont = u_value * c
        else:
            cont = c * stats.beta.ppf(u_value, self.beta_a, self.beta_b)
        p0, pc = self.atom_at_zero_prob, self.atom_at_c_prob
        out = np.where(u_component < p0, 0.0, np.where(u_component < p0 + pc, c, cont))
        return np.clip(out, 0.0, c)

    def sample(self, c: float, size, rng: np.random.Generator) -> np.ndarray:
        """Plain i.i.d. draws (no site keying), e.g. for pairs in the two-point bound."""
        return self.transform(rng.random(size), rng.random(size), c)

    def to_dict(self) -> dict:
        return {
            "atom_at_zero_prob": self.atom_at_zero_prob,
            "atom_at_c_prob": self.atom_at_c_prob,
            "continuous_weight": self.continuous_weight,
            "continuous_density": self.continuous_density,
            "beta_a": self.beta_a,
            "beta_b": self.beta_b,
        }


@dataclass(frozen=True)
class EnvironmentSpec:
    """Model parameters: source intensity, walk intensity, killing bound, killing law."""

    lambda_source: float
    kappa: float
    c: float
    mu_dist: MuDistribution = field(default_factory=MuDistribution)

    def __post_init__(self):
        if not self.lambda_source >= 0:
            raise ConfigurationError(f"lambda_source must be >= 0, got {self.lambda_source}")
        if not self.kappa > 0:
            raise ConfigurationError(f"kappa must be > 0, got {self.kappa}")
        if not self.c >= 0:
            raise ConfigurationError(f"c must be >= 0, got {self.c}")

    @property
    def p0(self) -> float:
        """Probability that a site carries no killing at all."""
        if self.c == 0.0:
            return self.mu_dist.atom_at_zero_prob + self.mu_dist.atom_at_c_prob + \
                self.mu_dist.continuous_weight
        return self.mu_dist.atom_at_zero_prob

    def with_lambda(self, lambda_source: float) -> "EnvironmentSpec":
        return EnvironmentSpec(lambda_source, self.kappa, self.c, self.mu_dist)

    def to_dict(self) -> dict:
        return {"lambda_source": self.lambda_source, "kappa": self.kappa, "c": self.c,
                "mu_dist": self.mu_dist.to_dict()}


@dataclass(frozen=True, eq=False)
class EnvironmentWindow:
    """Killing rates on sites ``-L..L``; ``mu[x + L]`` is the rate at ``x``."""

    half_width: int
    mu: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        mu = np.array(self.mu, dtype=float)
        if mu.shape != (2 * self.half_width + 1,):
            raise ValueError(f"mu must have length {2 * self.half_width + 1}, got {mu.shape}")
        mu[self.half_width] = 0.0
        if np.any(mu < 0):
            raise ValueError("killing rates must be non-negative")
        mu.setflags(write=False)
        object.__setattr__(self, "mu", mu)

    @property
    def sites(self) -> np.ndarray:
        return np.arange(-self.half_width, self.half_width + 1)

    @property
    def origin(self) -> int:
        """Array index of site 0."""
        return self.half_width

    def index(self, x: int) -> int:
        if abs(x) > self.half_width:
            raise ValueError(f"site {x} outside window of half-width {self.half_width}")
        return x + self.half_width

    def mu_at(self, x: int) -> float:
        if x == 0:
            raise ValueError("no killing rate is stored at the origin")
        return float(self.mu[self.index(x)])

    def restrict(self, half_width: int) -> "EnvironmentWindow":
        """Centered sub-window; identical rates on the shared sites."""
        if not 0 <= half_width <= self.half_width:
            raise ValueError(f"cannot restrict half-width {self.half_width} to {half_width}")
        d = self.half_width - half_width
        return EnvironmentWindow(half_width, self.mu[d:len(self.mu) - d], self.seed)

    def __eq__(self, other):
        if not isinstance(other, EnvironmentWindow):
            return NotImplemented
        return (self.half_width == other.half_width and self.seed == other.seed
                and np.array_equal(self.mu, other.mu))

    def to_json(self) -> str:
        L = self.half_width
        values = np.concatenate([self.mu[:L], self.mu[L + 1:]])
        return json.dumps({"half_width": L, "seed": self.seed, "mu": values.tolist()})

    @classmethod
    def from_json(cls, text: str) -> "EnvironmentWindow":
        data = json.loads(text)
        if "result" in data and "half_width" not in data:
            data = data["result"]           # output of the env-sample command
        L = int(data["half_width"])
        values = np.asarray(data["mu"], dtype=float)
        if values.shape != (2 * L,):
            raise ConfigurationError(f"expected {2 * L} killing rates, got {values.shape[0]}")
        mu = np.concatenate([values[:L], [0.0], values[L:]])
        seed = data.get("seed")
        return cls(L, mu, None if seed is None else int(seed))


def _stream_index(x: np.ndarray) -> np.ndarray:
    """Stream position of site x: 0 -> 0, 1 -> 1, -1 -> 2, 2 -> 3, -2 -> 4, ..."""
    x = np.asarray(x)
    return np.where(x > 0, 2 * x - 1, -2 * x)


def _site_uniforms(seed: int, half_width: int) -> np.ndarray:
    """Uniforms of shape ``(2L + 1, 2)`` ordered by site ``-L..L``."""
    key = np.random.SeedSequence(int(seed)).generate_state(2, np.uint64)
    gen = np.random.Generator(np.random.Philox(key=key))
    block = gen.random(_DRAWS_PER_SITE * (2 * half_width + 1))
    block = block.reshape(-1, _DRAWS_PER_SITE)
    sites = np.arange(-half_width, half_width + 1)
    return block[_stream_index(sites)]


def sample_environment(spec: EnvironmentSpec, half_width: int, seed: int) -> EnvironmentWindow:
    """Draw i.i.d. killing rates on ``-L..L`` keyed by ``(seed, site)``."""
    if half_width < 1:
        raise ValueError("half_width must be >= 1")
    u = _site_uniforms(seed, half_width)
    mu = spec.mu_dist.transform(u[:, 0], u[:, 1], spec.c)
    return EnvironmentWindow(half_width, mu, int(seed))


def sample_origin_rate(spec: EnvironmentSpec, seed: int) -> float:
    """Killing draw for the origin itself, used by the source-free operator."""
    u = _site_uniforms(seed, 0)
    return float(spec.mu_dist.transform(u[:, 0], u[:, 1], spec.c)[0])


def constant_environment(c1: float, half_width: int) -> EnvironmentWindow:
    if c1 < 0:
        raise ValueError("c1 must be >= 0")
    return EnvironmentWindow(half_width, np.full(2 * half_width + 1, float(c1)))


def two_point_environment(mu1: float, mu_minus1: float, half_width: int) -> EnvironmentWindow:
    """Killing only at the two neighbours of the origin."""
    if mu1 < 0 or mu_minus1 < 0:
        raise ValueError("killing rates must be >= 0")
    if half_width < 1:
        raise ValueError("half_width must be >= 1")
    mu = np.zeros(2 * half_width + 1)
    mu[half_width + 1] = mu1
    mu[half_width - 1] = mu_minus1
    return EnvironmentWindow(half_width, mu)


def island_environment(l: int, c: float, half_width: int) -> EnvironmentWindow:
    """No killing for ``1 <= |x| <= l``, rate ``c`` beyond."""
    if not 0 <= l < half_width:
        raise ValueError(f"island radius {l} must satisfy 0 <= l < half_width={half_width}")
    sites = np.arange(-half_width, half_width + 1)
    return EnvironmentWindow(half_width, np.where(np.abs(sites) > l, float(c), 0.0))


def potential(window: EnvironmentWindow, spec: EnvironmentSpec, x: int) -> float:
    """Source intensity at the origin, minus the killing rate elsewhere."""
    i = window.index(x)
    return spec.lambda_source if x == 0 else -float(window.mu[i])


def potential_array(window: EnvironmentWindow, spec: EnvironmentSpec) -> np.ndarray:
    v = -window.mu.copy()
    v[window.origin] = spec.lambda_source
    return v


def derive_seed(seed: int, *key: int) -> int:
    """Deterministic 64-bit sub-seed for task ``key`` under ``seed``."""
    ss = np.random.SeedSequence(int(seed), spawn_key=tuple(int(k) for k in key))
    return int(ss.generate_state(1, np.uint64)[0])
