"""Truncated evolution operator and its top of spectrum.

The operator on the window ``-L..L`` is the symmetric tridiagonal matrix with
diagonal ``V(x) - kappa`` and constant off-diagonal ``kappa / 2``; sites
outside the window are absent (the walk is killed on leaving), which can only
lower the top eigenvalue.  Eigenvalues are located by bisection on Sturm
sign counts.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numba
import numpy as np
from scipy.linalg import solve_banded

from .env import EnvironmentSpec, EnvironmentWindow, potential_array, sample_origin_rate
from .errors import ConvergenceError

DEFAULT_HALF_WIDTH = 400
POSITIVITY_TOL = 1e-7
EIGEN_TOL = 1e-12
ENVELOPE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class TridiagonalOperator:
    diag: np.ndarray
    offdiag: float
    half_width: int
    kappa: float
    c: float
    lambda_source: float

    @property
    def size(self) -> int:
        return len(self.diag)

    def matvec(self, u: np.ndarray) -> np.ndarray:
        out = self.diag * u
        out[1:] += self.offdiag * u[:-1]
        out[:-1] += self.offdiag * u[1:]
        return out

    def dense(self) -> np.ndarray:
        n = self.size
        return (np.diag(self.diag) + self.offdiag * np.eye(n, k=1)
                + self.offdiag * np.eye(n, k=-1))

    def restrict(self, half_width: int) -> "TridiagonalOperator":
        d = self.half_width - half_width
        if d < 0:
            raise ValueError("cannot enlarge an operator by restriction")
        return TridiagonalOperator(self.diag[d:self.size - d].copy(), self.offdiag,
                                   half_width, self.kappa, self.c, self.lambda_source)

    def enclosure(self) -> tuple[float, float]:
        """A-priori interval holding every eigenvalue."""
        k, c, lam = self.kappa, self.c, self.lambda_source
        lo = min(-2 * k - c - lam, float(self.diag.min()) - k)
        hi = max(lam + 2 * k, float(self.diag.max()) + k)
        return lo, hi


def build_hamiltonian(window: EnvironmentWindow, spec: EnvironmentSpec) -> TridiagonalOperator:
    diag = potential_array(window, spec) - spec.kappa
    return TridiagonalOperator(diag, spec.kappa / 2.0, window.half_width, spec.kappa,
                               spec.c, spec.lambda_source)


def build_mu_hamiltonian(window: EnvironmentWindow, spec: EnvironmentSpec,
                         mu_origin: float | None = None) -> TridiagonalOperator:
    """Source-free operator: the origin is killed like any other site.

    ``mu_origin`` defaults to the origin draw of the window's seed stream (0 for
    windows without a seed).
    """
    if mu_origin is None:
        mu_origin = sample_origin_rate(spec, window.seed) if window.seed is not None else 0.0
    diag = -window.mu - spec.kappa
    diag[window.origin] = -mu_origin - spec.kappa
    return TridiagonalOperator(diag, spec.kappa / 2.0, window.half_width, spec.kappa,
                               spec.c, 0.0)


@numba.njit(cache=True, nogil=True)
def _count_below(diag, off2, shift, pivmin):
    # Number of eigenvalues strictly below ``shift``.
    count = 0
    q = diag[0] - shift
    if abs(q) < pivmin:
        q = -pivmin
    if q < 0:
        count += 1
    for i in range(1, diag.shape[0]):
        q = (diag[i] - shift) - off2 / q
        if abs(q) < pivmin:
            q = -pivmin
        if q < 0:
            count += 1
    return count


@numba.njit(cache=True, nogil=True)
def _bisect_kth(diag, off2, k, lo, hi, tol, pivmin):
    # Locate the eigenvalue of rank k (0 = smallest) inside [lo, hi].
    while hi - lo > tol:
        mid = 0.5 * (lo + hi)
        if mid <= lo or mid >= hi:
            break
        if _count_below(diag, off2, mid, pivmin) > k:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def _pivmin(op: TridiagonalOperator) -> float:
    return np.finfo(float).tiny * max(1.0, op.offdiag ** 2)


def count_below(op: TridiagonalOperator, shift: float) -> int:
    """Sturm count: number of eigenvalues strictly below ``shift``."""
    return int(_count_below(op.diag, op.offdiag ** 2, float(shift), _pivmin(op)))


def count_above(op: TridiagonalOperator, shift: float) -> int:
    """Number of eigenvalues at or above ``shift`` (up to rounding)."""
    return op.size - count_below(op, shift)


def top_eigenvalue(op: TridiagonalOperator, tol: float = EIGEN_TOL) -> float:
    lo, hi = op.enclosure()
    return float(_bisect_kth(op.diag, op.offdiag ** 2, op.size - 1, lo, hi, tol, _pivmin(op)))


def eigenfunction(op: TridiagonalOperator, lam: float, iterations: int = 4,
                  residual_tol: float = 1e-8) -> tuple[np.ndarray, np.ndarray]:
    """Inverse iteration at ``lam``.

    Returns ``(u, v)``: ``u`` rescaled so that ``u(0) = 1`` and ``v`` with unit
    l2 norm.  Raises ``ConvergenceError`` if ``lam`` is not an eigenvalue.
    """
    n = op.size
    scale = max(1.0, abs(lam))
    shift = lam + 1e-13 * scale
    ab = np.empty((3, n))
    ab[0, :] = op.offdiag
    ab[1, :] = op.diag - shift
    ab[2, :] = op.offdiag
    v = np.ones(n) / math.sqrt(n)
    for _ in range(iterations):
        try:
            w = solve_banded((1, 1), ab, v, check_finite=False)
        except np.linalg.LinAlgError:
            ab[1, :] = op.diag - (shift + 1e-11 * scale)
            w = solve_banded((1, 1), ab, v, check_finite=False)
        norm = np.linalg.norm(w)
        if not np.isfinite(norm) or norm == 0:
            raise ConvergenceError("inverse iteration broke down")
        v = w / norm
    residual = float(np.linalg.norm(op.matvec(v) - lam * v))
    if residual > residual_tol * scale:
        raise ConvergenceError(
            f"{lam!r} is not an eigenvalue (residual {residual:.3e})")
    o = op.half_width
    if abs(v[o]) < 1e-300:
        raise ConvergenceError("eigenvector vanishes at the origin")
    if v[o] < 0:
        v = -v
    return v / v[o], v


@dataclass(frozen=True, eq=False)
class EigenReport:
    lambda_top: float
    has_positive: bool | None
    eigenfunction: np.ndarray
    truncation_gap: float
    residual: float
    half_width: int

    @property
    def indeterminate(self) -> bool:
        return self.has_positive is None

    def to_dict(self) -> dict:
        return {"lambda_top": self.lambda_top, "has_positive": self.has_positive,
                "truncation_gap": self.truncation_gap, "residual": self.residual,
                "half_width": self.half_width}

    def to_json(self) -> str:
        return json.dumps(self.to_dict())


def _verdict(top: float, top_half: float, tol: float) -> bool | None:
    # Dirichlet truncation only lowers eigenvalues, so top > tol is certified;
    # a verdict is withheld only when the two widths straddle tol.
    gap = abs(top - top_half)
    if gap < tol / 10:
        return top > tol
    if top_half > tol:
        return True
    if top <= tol:
        return False
    return None


def eigen_report(window: EnvironmentWindow, spec: EnvironmentSpec,
                 tol: float = POSITIVITY_TOL, with_eigenfunction: bool = True) -> EigenReport:
    """Top eigenvalue, positivity verdict and truncation diagnostics of one window."""
    if not tol > 0:
        raise ValueError("tol must be positive")
    op = build_hamiltonian(window, spec)
    top = top_eigenvalue(op)
    top_half = top_eigenvalue(op.restrict(window.half_width // 2))
    vec = np.empty(0)
    residual = float("nan")
    if with_eigenfunction:
        _, vec = eigenfunction(op, top)
        residual = float(np.linalg.norm(op.matvec(vec) - top * vec))
    return EigenReport(top, _verdict(top, top_half, tol), vec, abs(top - top_half),
                       residual, window.half_width)


def has_positive_eigenvalue(window: EnvironmentWindow, spec: EnvironmentSpec,
                            tol: float = POSITIVITY_TOL) -> bool | None:
    """True/False verdict on a positive eigenvalue; ``None`` means indeterminate.

    ``None`` is returned when the widths ``L`` and ``L/2`` straddle ``tol``;
    the caller should retry on a wider window.
    """
    if spec.lambda_source == 0:
        return False
    return eigen_report(window, spec, tol, with_eigenfunction=False).has_positive


def spectrum_envelope_check(window: EnvironmentWindow, spec: EnvironmentSpec,
                            mu_origin: float | None = None,
                            tol: float = ENVELOPE_TOL) -> bool:
    """All eigenvalues of the source-free truncation lie in ``[-2k - c, 0]`` (+-tol)."""
    op = build_mu_hamiltonian(window, spec, mu_origin)
    above = count_above(op, tol)
    below = count_below(op, -2 * spec.kappa - spec.c - tol)
    return above == 0 and below == 0
