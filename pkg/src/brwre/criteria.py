"""Closed-form supercriticality criteria and the equations behind the bounds.

Notation used throughout: ``kappa`` walk intensity, ``c`` killing bound,
``lam_src`` source intensity at the origin, ``sigma = 2 / kappa``.
"""

from __future__ import annotations

import math
import warnings
from dataclasses import dataclass

import numpy as np

from .env import EnvironmentSpec, EnvironmentWindow
from .errors import DomainError, NumericError
from .paths import log_catalan

ROOT_TOL = 1e-12
ISLAND_EPS = 1e-9


@dataclass(frozen=True)
class IntervalBound:
    lower: float
    upper: float

    def __contains__(self, value) -> bool:
        return self.lower <= value <= self.upper


@dataclass(frozen=True)
class IslandSolveResult:
    l: int
    lambda_root: float | None
    R_value: float
    converged: bool


def _bisect(f, lo: float, hi: float, tol: float = ROOT_TOL) -> float:
    """Root of a function that is positive at ``lo`` and non-positive at ``hi``."""
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if f(mid) > 0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def as_supercritical_threshold(kappa: float, c: float) -> float:
    return math.sqrt((kappa + c) ** 2 - kappa ** 2) - c


def as_supercritical_condition(lam_src: float, kappa: float, c: float) -> bool:
    """Every environment yields growth iff ``lam_src >= sqrt((k+c)^2 - k^2) - c``."""
    return lam_src >= as_supercritical_threshold(kappa, c)


def constant_env_eigenvalue(lam_src: float, kappa: float, c1: float) -> float:
    """Eigenvalue candidate for constant killing ``c1``; genuine only when positive."""
    return math.hypot(lam_src + c1, kappa) - (c1 + kappa)


def eigenvalue_interval(lam_src: float, kappa: float, c: float) -> IntervalBound:
    if not as_supercritical_condition(lam_src, kappa, c):
        raise DomainError("interval is only asserted when the almost-sure condition holds")
    lo = constant_env_eigenvalue(lam_src, kappa, c)
    hi = constant_env_eigenvalue(lam_src, kappa, 0.0)
    return IntervalBound(min(lo, hi), hi)


def two_point_threshold(kappa: float, mu1: float, mu_m1: float) -> float:
    sigma = 2.0 / kappa
    return (mu1 + mu_m1 + 2 * sigma * mu1 * mu_m1) / ((1 + sigma * mu1) * (1 + sigma * mu_m1))


def two_point_condition(lam_src: float, kappa: float, mu1: float, mu_m1: float) -> bool:
    """Positive eigenvalue exists when only the two neighbours of 0 are killing."""
    return lam_src > two_point_threshold(kappa, mu1, mu_m1)


def _two_point_cubic(z, lam_src, sigma, mu):
    return z ** 3 - z ** 2 * sigma * (lam_src - mu) - z * (sigma ** 2 * lam_src * mu + 1) + sigma * mu


def two_point_eigenvalue_symmetric(lam_src: float, kappa: float, mu: float) -> float | None:
    """Positive eigenvalue for killing ``mu`` at both neighbours, or ``None``.

    With ``z = exp(k)`` the eigenfunction decays as ``z**-|x|``; ``z > 1`` solves a
    cubic and the eigenvalue is ``(kappa/2)(z + 1/z - 2)``.
    """
    sigma = 2.0 / kappa
    if _two_point_cubic(1.0, lam_src, sigma, mu) >= 0:
        return None
    hi = 2.0 + sigma * lam_src
    while _two_point_cubic(hi, lam_src, sigma, mu) <= 0:
        hi *= 2
    z = _bisect(lambda t: -_two_point_cubic(t, lam_src, sigma, mu), 1.0, hi)
    lam = 0.5 * kappa * (z + 1.0 / z - 2.0)
    return lam if lam > 0 else None


def quadratic_form(window: EnvironmentWindow, spec: EnvironmentSpec, a: float) -> float:
    """``(H psi, psi)`` for ``psi(x) = 2**(-a|x|)`` on the whole lattice.

    Killing beyond the window is unknown; it is taken at its maximum ``c``, so
    the returned value never exceeds the true one.
    """
    if not a > 0:
        raise ValueError("a must be positive")
    return float(quadratic_form_batch(window.mu[None, :], spec, a)[0])


def quadratic_form_batch(mu: np.ndarray, spec: EnvironmentSpec, a: float) -> np.ndarray:
    """Vectorised :func:`quadratic_form` over rows of dense killing arrays."""
    mu = np.atleast_2d(mu)
    L = (mu.shape[1] - 1) // 2
    dist = np.abs(np.arange(-L, L + 1))
    w = 4.0 ** (-a * dist)
    w[L] = 0.0
    kappa, c = spec.kappa, spec.c
    tail = c * 2.0 * 4.0 ** (-a * L) / (4.0 ** a - 1.0)
    base = spec.lambda_source - kappa * (2.0 ** a - 1.0) / (2.0 ** a + 1.0)
    return base - mu @ w - tail


def _catalan_tail_sum(a: float, l: int, tol: float, max_terms: int) -> float:
    """``sum_k a**(2k+1) C_{k+l}`` for ``0 < a < 1/2``."""
    if a == 0.0:
        return 0.0
    r = 4.0 * a * a
    # Terms decay at least like r**k; pick the route by the work it needs.
    if r < 1.0 and math.log(tol * (1 - r)) / math.log(r) < max_terms:
        k = np.arange(max_terms)
        total = 0.0
        chunk = 4096
        for start in range(0, max_terms, chunk):
            kk = k[start:start + chunk]
            terms = np.exp((2 * kk + 1) * math.log(a) + log_catalan(kk + l))
            total += terms.sum()
            last = terms[-1]
            if last * r / (1.0 - r) < tol * max(1.0, abs(total)):
                return float(total)
        raise NumericError("Catalan series did not reach tolerance")
    # Generating-function complement: C(y) - sum_{j<l} C_j y^j, y = a^2.
    y = a * a
    gen = 2.0 / (1.0 + math.sqrt(1.0 - 4.0 * y))
    head = sum(math.exp(float(log_catalan(j)) + j * math.log(y)) for j in range(l))
    return a * (gen - head) / y ** l


def island_R(alpha: float, beta: float, l: int, tol: float = 1e-15,
             max_terms: int = 200_000) -> float:
    """``R(alpha, beta) = sum_k (beta**(2k+1) - alpha**(2k+1)) C_{k+l}`` (never positive).

    ``tol`` is relative to the size of each partial sum.
    """
    if not (0 < beta <= alpha):
        raise ValueError(f"need 0 < beta <= alpha, got alpha={alpha}, beta={beta}")
    if alpha >= 0.5:
        raise DomainError(f"series undefined for alpha >= 1/2 (alpha={alpha})")
    if beta == alpha:
        return 0.0
    R = _catalan_tail_sum(beta, l, tol, max_terms) - _catalan_tail_sum(alpha, l, tol, max_terms)
    return min(R, 0.0)


def island_equation(lam: float, lam_src: float, kappa: float, c: float, l: int) -> float:
    """Left-hand side ``g(lam)`` of the island equation; decreasing in ``lam``."""
    alpha = 0.5 * kappa / (kappa + lam)
    beta = 0.5 * kappa / (c + kappa + lam)
    head = 2 * alpha * kappa / (1 + math.sqrt(1 - 4 * alpha * alpha))
    R = island_R(alpha, beta, l)
    return head + kappa * alpha ** (2 * l) * R + lam_src - kappa - lam


def island_solve(lam_src: float, kappa: float, c: float, l: int) -> IslandSolveResult:
    if l < 0:
        raise ValueError("l must be >= 0")
    g = lambda lam: island_equation(lam, lam_src, kappa, c, l)
    lo, hi = ISLAND_EPS, lam_src + 2 * kappa
    g_lo = g(lo)
    alpha = 0.5 * kappa / (kappa + lo)
    R_lo = island_R(alpha, 0.5 * kappa / (c + kappa + lo), l)
    if g_lo <= 0:
        return IslandSolveResult(l, None, R_lo, True)
    grid = np.linspace(lo, hi, 8)
    vals = [g(t) for t in grid]
    if np.any(np.diff(vals) >= 0):
        warnings.warn(f"island equation not monotone in lambda for l={l}", RuntimeWarning)
    root = _bisect(g, lo, hi)
    res = abs(g(root))
    alpha = 0.5 * kappa / (kappa + root)
    R = island_R(alpha, 0.5 * kappa / (c + kappa + root), l)
    return IslandSolveResult(l, root, R, res < 1e-10)


def island_lambda(lam_src: float, kappa: float, c: float, l: int) -> float | None:
    """Lower bound on the eigenvalue for an ``l``-island environment, or ``None``."""
    result = island_solve(lam_src, kappa, c, l)
    if result.lambda_root is not None and not result.converged:
        raise NumericError(f"island equation residual too large at l={l}")
    return result.lambda_root


def find_l_hat(lam_src: float, kappa: float, c: float, l_max: int) -> int | None:
    """Smallest island radius ``l <= l_max`` whose equation has a positive root."""
    if l_max < 0:
        raise ValueError("l_max must be >= 0")
    for l in range(l_max + 1):
        if island_lambda(lam_src, kappa, c, l) is not None:
            return l
    return None
