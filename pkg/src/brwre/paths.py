"""Path expansion of the normalized eigenfunction and its path counts.

For ``lambda > 0`` put ``E = kappa + lambda``.  The solution of the
eigen-equation away from the origin, normalized by ``u(0) = 1``, is

    u(x) = sum over nearest-neighbour paths x -> 0 that avoid 0 before the
           last step, of the product over visited sites z != 0 of
           (kappa / 2) / (mu(z) + E).

The sum is evaluated by a transfer recursion over path length instead of by
enumeration.  Paths leaving the window are dropped, which matches the
Dirichlet truncation used by :mod:`brwre.spectral`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .env import EnvironmentSpec, EnvironmentWindow
from .errors import DomainError, TruncationError

MAX_EXACT_CATALAN = 35


@dataclass(frozen=True)
class PathSeriesResult:
    value: float
    terms_used: int
    tail_bound: float


def catalan(n: int) -> int:
    """Exact Catalan number for ``0 <= n <= 35`` (fits a signed 64-bit integer)."""
    if n < 0 or n > MAX_EXACT_CATALAN:
        raise ValueError(f"exact Catalan numbers are provided for 0 <= n <= 35, got {n}")
    return math.comb(2 * n, n) // (n + 1)


def log_catalan(n) -> np.ndarray:
    """``log C_n`` in floating point, valid for any ``n >= 0``."""
    n = np.asarray(n, dtype=float)
    from scipy.special import gammaln
    return gammaln(2 * n + 1) - 2 * gammaln(n + 1) - np.log(n + 1)


def path_count(x: int, n: int) -> int:
    """Number of ``n``-step paths from ``x >= 1`` to 0 that touch 0 only at the end."""
    if x < 1:
        raise ValueError("x must be >= 1")
    if n < x or (n - x) % 2:
        return 0
    return math.comb(n - 1, (n - x) // 2) - math.comb(n - 1, (n + x) // 2)


def _tail_bound(q: float, n_terms: int) -> float:
    # Weight per step <= kappa / (2E); at most 2**(n-1) paths of length n.
    # Tail over n > N: sum 0.5 * q**n = 0.5 * q**(N+1) / (1 - q), q = kappa / E.
    return 0.5 * q ** (n_terms + 1) / (1.0 - q)


def _terms_needed(q: float, tol: float) -> int:
    n = math.log(2.0 * tol * (1.0 - q)) / math.log(q) - 1.0
    return max(1, math.ceil(n))


def u_path_profile(window: EnvironmentWindow, spec: EnvironmentSpec, lam: float,
                   tol: float = 1e-13) -> tuple[np.ndarray, PathSeriesResult]:
    """Path series on every site of the window.

    Returns ``(u, info)``: ``u`` indexed like ``window.mu`` with ``u(0) = 1``;
    ``info.value`` is ``u(1)``.
    """
    if not lam > 0:
        raise DomainError(f"path series diverges for lambda <= 0 (got {lam})")
    kappa = spec.kappa
    E = kappa + lam
    q = kappa / E
    N = _terms_needed(q, tol)
    L = window.half_width
    # A path that leaves the window and returns has length > 2L + 1 - |x|, so
    # the dropped paths are all longer than N only if L is large enough.
    if N > L + 1:
        raise TruncationError(
            f"half-width {L} too small: tolerance {tol:g} needs paths of length {N}")
    weight = (kappa / 2.0) / (window.mu + E)
    o = window.origin
    weight[o] = 0.0
    prev = np.zeros(2 * L + 1)
    prev[o] = 1.0
    total = np.zeros(2 * L + 1)
    nxt = np.empty_like(prev)
    for _ in range(N):
        nxt[:] = 0.0
        nxt[1:] += prev[:-1]
        nxt[:-1] += prev[1:]
        nxt *= weight
        total += nxt
        prev, nxt = nxt, prev
    total[o] = 1.0
    info = PathSeriesResult(float(total[o + 1]), N, _tail_bound(q, N))
    return total, info


def u_path_series(window: EnvironmentWindow, spec: EnvironmentSpec, lam: float, x: int,
                  tol: float = 1e-13) -> PathSeriesResult:
    """Path series value ``u(x)`` with its truncation certificate."""
    i = window.index(x)
    u, info = u_path_profile(window, spec, lam, tol)
    return PathSeriesResult(float(u[i]), info.terms_used, 0.0 if x == 0 else info.tail_bound)


def u1_constant_closed_form(kappa: float, lam: float, c1: float) -> float:
    """``u(1)`` for constant killing ``c1``: ``E1/k - sqrt((E1/k)**2 - 1)``."""
    E1 = kappa + lam + c1
    if E1 < kappa:
        raise DomainError(f"E1 = {E1} < kappa = {kappa}")
    r = E1 / kappa
    # Same value, written without cancellation for large r.
    return 1.0 / (r + math.sqrt(r * r - 1.0))


def verify_resolvent_identity(window: EnvironmentWindow, spec: EnvironmentSpec, lam: float,
                              u: np.ndarray) -> float:
    """Largest violation of ``(k/2)(u(x+1) + u(x-1)) = (mu(x) + E) u(x)`` off the origin."""
    u = np.asarray(u, dtype=float)
    E = spec.kappa + lam
    lhs = 0.5 * spec.kappa * (u[2:] + u[:-2])
    rhs = (window.mu[1:-1] + E) * u[1:-1]
    res = np.abs(lhs - rhs)
    res[window.origin - 1] = 0.0
    return float(res.max()) if res.size else 0.0
