"""First-moment equation ``dm/dt = H m`` on a truncated lattice.

Classical fourth-order Runge-Kutta with a fixed step.  The step must satisfy
``dt <= 0.1 / (2 kappa + c + Lambda)``; inside that margin the scheme keeps
the solution non-negative, so no clipping is applied.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np

from .env import EnvironmentSpec, EnvironmentWindow
from .errors import StabilityError, UndefinedRateError
from .spectral import TridiagonalOperator, build_hamiltonian

STABILITY_MARGIN = 0.1
FIT_FRACTION = 0.3
MIN_FIT_SAMPLES = 20


@dataclass(frozen=True, eq=False)
class MomentTrajectory:
    times: np.ndarray
    fields: np.ndarray      # shape (len(times), 2L + 1)
    source: int | None
    half_width: int

    def at_site(self, x: int) -> np.ndarray:
        if abs(x) > self.half_width:
            raise ValueError(f"site {x} outside window")
        return self.fields[:, x + self.half_width]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["t", "x", "m1"])
        sites = range(-self.half_width, self.half_width + 1)
        for t, row in zip(self.times, self.fields):
            for x, m in zip(sites, row):
                w.writerow([format(t, ".17g"), x, format(m, ".17g")])
        return buf.getvalue()


def max_stable_dt(spec: EnvironmentSpec) -> float:
    return STABILITY_MARGIN / (2 * spec.kappa + spec.c + spec.lambda_source)


def evolution_half_width(kappa: float, t_end: float) -> int:
    """Window wide enough that diffusive leakage through the boundary is negligible."""
    return int(math.ceil(4 * math.sqrt(kappa * t_end) + 20))


def integrate_linear(op: TridiagonalOperator, initial: np.ndarray, t_end: float, dt: float,
                     n_records: int = 1001) -> tuple[np.ndarray, np.ndarray]:
    """RK4 for ``dm/dt = op m``; returns ``(times, states)`` at about ``n_records`` times."""
    n_steps = max(1, int(math.ceil(t_end / dt - 1e-12)))
    h = t_end / n_steps
    stride = max(1, n_steps // max(1, n_records - 1))
    record_steps = list(range(0, n_steps + 1, stride))
    if record_steps[-1] != n_steps:
        record_steps.append(n_steps)
    out = np.empty((len(record_steps), len(initial)))
    m = np.array(initial, dtype=float)
    out[0] = m
    j = 1
    f = op.matvec
    for step in range(1, n_steps + 1):
        k1 = f(m)
        k2 = f(m + 0.5 * h * k1)
        k3 = f(m + 0.5 * h * k2)
        k4 = f(m + h * k3)
        m = m + (h / 6.0) * (k1 + 2 * k2 + 2 * k3 + k4)
        if j < len(record_steps) and step == record_steps[j]:
            out[j] = m
            j += 1
    return np.array(record_steps) * h, out


def integrate_moments(window: EnvironmentWindow, spec: EnvironmentSpec, y: int, t_end: float,
                      dt: float | None = None, n_records: int = 1001) -> MomentTrajectory:
    """Mean particle numbers started from one particle at site ``y``."""
    limit = max_stable_dt(spec)
    if dt is None:
        dt = limit
    if dt > limit * (1 + 1e-12):
        raise StabilityError(f"dt={dt} exceeds the stability limit {limit}")
    if t_end <= 0:
        raise ValueError("t_end must be positive")
    op = build_hamiltonian(window, spec)
    initial = np.zeros(op.size)
    initial[window.index(y)] = 1.0
    times, fields = integrate_linear(op, initial, t_end, dt, n_records)
    return MomentTrajectory(times, fields, y, window.half_width)


def fit_log_slope(times: np.ndarray, values: np.ndarray,
                  fraction: float = FIT_FRACTION) -> float:
    """Least-squares slope of ``log values`` over the final ``fraction`` of the time range."""
    times = np.asarray(times, dtype=float)
    values = np.asarray(values, dtype=float)
    t0 = times[-1] - fraction * (times[-1] - times[0])
    sel = times >= t0
    v = values[sel]
    if sel.sum() < MIN_FIT_SAMPLES:
        raise UndefinedRateError(f"only {sel.sum()} samples in the fit window")
    if np.any(~np.isfinite(v)) or np.any(v <= np.finfo(float).tiny):
        raise UndefinedRateError("values vanish or underflow in the fit window")
    slope, _ = np.polyfit(times[sel], np.log(v), 1)
    return float(slope)


def growth_rate(traj: MomentTrajectory, site: int) -> float:
    return fit_log_slope(traj.times, traj.at_site(site))
