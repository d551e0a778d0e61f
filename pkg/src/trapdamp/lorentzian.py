"""Damped least-squares fit of a single resonance peak.

Model: ``y(f) = A / (1 + (2 Q (f - f0) / f0)**2)``.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.optimize import least_squares

from .errors import FitError

MIN_POINTS = 7
MAX_ITERATIONS = 200


@dataclass(frozen=True)
class PeakFit:
    f0: float
    q: float
    amplitude: float
    residual: float
    iterations: int
    converged: bool


def lorentzian(f, f0, q, amplitude):
    x = 2.0 * q * (np.asarray(f, dtype=float) - f0) / f0
    return amplitude / (1.0 + x * x)


def _half_power_width(f, y, i_peak):
    half = 0.5 * y[i_peak]
    edges = []
    for direction in (-1, 1):
        j = i_peak
        while 0 <= j + direction < f.size and y[j + direction] > half:
            j += direction
        k = j + direction
        if not 0 <= k < f.size:
            edges.append(None)
            continue
        # linear interpolation between j (above) and k (below)
        frac = (y[j] - half) / (y[j] - y[k])
        edges.append(f[j] + frac * (f[k] - f[j]))
    left, right = edges
    if left is not None and right is not None:
        return right - left
    if left is not None:
        return 2.0 * (f[i_peak] - left)
    if right is not None:
        return 2.0 * (right - f[i_peak])
    return 0.5 * (f[-1] - f[0])


def fit_peak(f, y, max_iterations: int = MAX_ITERATIONS, rtol: float = 1e-10) -> PeakFit:
    """Fit ``y(f)`` to a Lorentzian.

    Initial guess: f0 at the sample maximum, Q from the half-power crossings,
    A from the peak value. Raises :class:`FitError` when no interior peak exists.
    Non-convergence is reported through ``PeakFit.converged``.
    """
    f = np.asarray(f, dtype=float)
    y = np.asarray(y, dtype=float)
    if f.size < MIN_POINTS:
        raise FitError(f"need at least {MIN_POINTS} points, got {f.size}")
    if not np.all(np.isfinite(y)):
        raise FitError("data contain non-finite values")
    i_peak = int(np.argmax(y))
    span = y.max() - y.min()
    if i_peak in (0, f.size - 1) or not span > 1e-12 * max(abs(y.max()), 1e-300):
        raise FitError("no interior peak in data")

    f_init = f[i_peak]
    a_init = y[i_peak]
    width = _half_power_width(f, y, i_peak)
    q_init = f_init / width
    hw = 0.5 * width

    # scaled coordinates: offset in half-widths, log Q and log A relative to the guess
    def unpack(p):
        return f_init + p[0] * hw, q_init * np.exp(p[1]), a_init * np.exp(p[2])

    def residuals(p):
        f0, q, a = unpack(p)
        return (lorentzian(f, f0, q, a) - y) / a_init

    sol = least_squares(
        residuals,
        np.zeros(3),
        method="lm",
        ftol=rtol,
        xtol=rtol,
        gtol=rtol,
        max_nfev=max_iterations * 4,
    )
    f0, q, a = unpack(sol.x)
    rms = float(np.sqrt(np.mean(sol.fun**2)))
    converged = bool(sol.status > 0) and q > 0 and a > 0 and f[0] <= f0 <= f[-1]
    return PeakFit(float(f0), float(q), float(a), rms, int(sol.nfev), converged)
