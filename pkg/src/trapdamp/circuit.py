"""Impedance of the switchable detection tank seen from the detection endcap.

Topology (node T is the endcap, node M is the inductor tap)::

    T --+-- c_trap --+-- gnd        M --+-- l2 ------------------------ gnd
        +-- r_loss --+                  +-- c_tuning -- (r_state || c_ds) -- gnd
        +-- l1 ----- M                  +-- c_amp ---------------------- gnd

The switch HEMT drain-source path is ``r_state || c_ds`` where ``r_state`` is
``r_off`` or ``r_on``. Mutual inductance between ``l1`` and ``l2`` is ignored.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy.optimize import brentq

from . import _kernels as kernels
from ._kernels import tank_impedance as _tank_impedance
from .constants import TWO_PI
from .errors import DomainError, FitError, InvalidParameterError, SingularityError
from .lorentzian import fit_peak

# Parallel loss giving an 83 kOhm off-state peak with the default parts
# (see calibrate_r_loss; pinned by a test).
R_LOSS_DEFAULT = 87_707.369


class SwitchState(enum.Enum):
    OFF = "off"
    ON = "on"

    @classmethod
    def parse(cls, value: "SwitchState | str") -> "SwitchState":
        if isinstance(value, cls):
            return value
        try:
            return cls(str(value).lower())
        except ValueError:
            raise InvalidParameterError(f"unknown switch state {value!r}") from None


@dataclass(frozen=True)
class HemtModel:
    """Drain-source model of the switch HEMT: a resistor in parallel with ``c_ds``."""

    r_off: float = 65e3
    r_on: float = 9.6
    c_ds: float = 1.8e-12

    def __post_init__(self):
        # r_off == r_on is allowed so the degenerate "no switching" case can be built
        if not (self.r_on > 0 and self.r_off >= self.r_on):
            raise InvalidParameterError(
                f"need r_off >= r_on > 0, got r_off={self.r_off}, r_on={self.r_on}"
            )
        if not self.c_ds >= 0:
            raise InvalidParameterError(f"c_ds must be >= 0, got {self.c_ds}")

    def resistance(self, state: SwitchState) -> float:
        return self.r_on if SwitchState.parse(state) is SwitchState.ON else self.r_off


@dataclass(frozen=True)
class CircuitParams:
    c_trap: float = 8.2e-12
    l1: float = 55e-9
    l2: float = 15e-9
    r_loss: float = R_LOSS_DEFAULT
    c_amp: float = 0.0
    c_tuning: float = 22e-12
    hemt: HemtModel = field(default_factory=HemtModel)

    def __post_init__(self):
        for name in ("c_trap", "c_amp", "c_tuning"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value >= 0):
                raise InvalidParameterError(f"{name} must be finite and >= 0, got {value}")
        for name in ("l1", "l2", "r_loss"):
            value = getattr(self, name)
            if not (math.isfinite(value) and value > 0):
                raise InvalidParameterError(f"{name} must be finite and > 0, got {value}")

    @property
    def l_total(self) -> float:
        return self.l1 + self.l2

    def bare_resonance(self) -> float:
        """LC resonance of ``l1 + l2`` with ``c_trap`` alone, in Hz."""
        if self.c_trap == 0:
            raise InvalidParameterError("bare resonance undefined for c_trap = 0")
        return 1.0 / (TWO_PI * math.sqrt(self.l_total * self.c_trap))


@dataclass(frozen=True)
class ImpedanceTrace:
    """Complex impedance sampled on a strictly increasing frequency grid (Hz, Ohm)."""

    freq: np.ndarray
    z: np.ndarray

    def __post_init__(self):
        freq = np.asarray(self.freq, dtype=float)
        z = np.asarray(self.z, dtype=complex)
        if freq.ndim != 1 or freq.size == 0:
            raise InvalidParameterError("trace must be a nonempty 1-d array")
        if z.shape != freq.shape:
            raise InvalidParameterError("freq and z must have the same length")
        if freq.size > 1 and not np.all(np.diff(freq) > 0):
            raise InvalidParameterError("trace frequencies must be strictly increasing")
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "z", z)

    def __len__(self):
        return self.freq.size

    @property
    def re(self) -> np.ndarray:
        return self.z.real

    @property
    def im(self) -> np.ndarray:
        return self.z.imag


@dataclass(frozen=True)
class ResonanceSummary:
    """Resonance extracted from a trace.

    ``r_parallel`` is ``q * 2 pi f0 * L`` when an inductance is supplied,
    otherwise the fitted peak value. ``r_peak`` is always the fitted peak.
    """

    f0: float
    q: float
    r_parallel: float
    r_peak: float
    fit_residual: float = 0.0
    converged: bool = True

    def __post_init__(self):
        if not (self.f0 > 0 and self.q > 0 and self.r_parallel > 0):
            raise InvalidParameterError(f"non-physical resonance summary {self}")

    def to_json(self) -> dict:
        return {
            "f0_hz": self.f0,
            "q": self.q,
            "r_ohm": self.r_parallel,
            "fit_residual": self.fit_residual,
            "r_peak_ohm": self.r_peak,
        }


def _unpack(params: CircuitParams, state: SwitchState):
    h = params.hemt
    return (
        params.c_trap,
        params.l1,
        params.l2,
        params.r_loss,
        params.c_amp,
        params.c_tuning,
        h.resistance(state),
        h.c_ds,
    )


def impedance(params: CircuitParams, state: SwitchState | str, f):
    """Complex impedance at frequency ``f`` (Hz, scalar or array)."""
    state = SwitchState.parse(state)
    f_arr = np.asarray(f, dtype=float)
    if np.any(~(f_arr > 0)):
        raise DomainError("frequency must be > 0")
    with np.errstate(all="ignore"):
        z = _tank_impedance(TWO_PI * f_arr, *_unpack(params, state))
    if not np.all(np.isfinite(z)):
        raise InvalidParameterError("impedance is not finite for these parameters")
    return complex(z) if np.ndim(z) == 0 else z


def impedance_func(params: CircuitParams, state: SwitchState | str) -> Callable:
    """Bind ``params`` and ``state``: returns ``f -> impedance(params, state, f)``."""
    state = SwitchState.parse(state)
    return lambda f: impedance(params, state, f)


def impedance_sweep(
    params: CircuitParams,
    state: SwitchState | str,
    f_start: float,
    f_stop: float,
    n_points: int,
) -> ImpedanceTrace:
    if not (0 < f_start < f_stop):
        raise DomainError(f"need 0 < f_start < f_stop, got {f_start}, {f_stop}")
    if int(n_points) < 2:
        raise DomainError(f"n_points must be >= 2, got {n_points}")
    freq = np.linspace(f_start, f_stop, int(n_points))
    return ImpedanceTrace(freq, impedance(params, state, freq))


def parallel_rlc_impedance(r: float, l: float, c: float, f):
    """Ideal parallel RLC; the analytic reference for the tank."""
    omega = TWO_PI * np.asarray(f, dtype=float)
    z = 1.0 / (1.0 / r + 1j * omega * c + 1.0 / (1j * omega * l))
    return complex(z) if np.ndim(z) == 0 else z


def parallel_rlc_for(f0: float, q: float, l: float) -> tuple[float, float]:
    """(r, c) of the parallel RLC with resonance ``f0``, quality ``q`` and inductance ``l``."""
    omega0 = TWO_PI * f0
    return q * omega0 * l, 1.0 / (omega0**2 * l)


def characterize_resonance(trace: ImpedanceTrace, l_total: float | None = None) -> ResonanceSummary:
    """Lorentzian fit of Re[Z]; ``r_parallel`` is ``Q * 2 pi f0 * l_total``."""
    fit = fit_peak(trace.freq, trace.re)
    if not fit.converged:
        raise FitError(
            f"Lorentzian fit did not converge (residual {fit.residual:.3g})",
            best=fit,
            residual=fit.residual,
        )
    r_par = fit.q * TWO_PI * fit.f0 * l_total if l_total is not None else fit.amplitude
    return ResonanceSummary(
        f0=fit.f0,
        q=fit.q,
        r_parallel=r_par,
        r_peak=fit.amplitude,
        fit_residual=fit.residual,
        converged=fit.converged,
    )


def resonance_peak(
    params: CircuitParams,
    state: SwitchState | str = SwitchState.OFF,
    f_lo: float | None = None,
    f_hi: float | None = None,
    n_grid: int = 4001,
) -> tuple[float, float]:
    """Frequency and value of the largest Re[Z] on ``[f_lo, f_hi]`` (grid + golden section)."""
    state = SwitchState.parse(state)
    f_b = params.bare_resonance()
    f_lo = 0.3 * f_b if f_lo is None else f_lo
    f_hi = 2.0 * f_b if f_hi is None else f_hi
    grid = np.geomspace(f_lo, f_hi, n_grid)
    values = impedance(params, state, grid).real
    i = int(np.argmax(values))
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, n_grid - 1)]
    g = (math.sqrt(5) - 1) / 2
    x1, x2 = b - g * (b - a), a + g * (b - a)
    r1 = impedance(params, state, x1).real
    r2 = impedance(params, state, x2).real
    while b - a > 1e-12 * b:
        if r1 > r2:
            b, x2, r2 = x2, x1, r1
            x1 = b - g * (b - a)
            r1 = impedance(params, state, x1).real
        else:
            a, x1, r1 = x1, x2, r2
            x2 = a + g * (b - a)
            r2 = impedance(params, state, x2).real
    f_peak = 0.5 * (a + b)
    return f_peak, impedance(params, state, f_peak).real


def switch_characteristics(params: CircuitParams, c_tuning=None, f_z: float | None = None):
    """Operating frequency, off-state Re[Z] and suppression for each ``c_tuning``.

    With ``f_z=None`` the electron is assumed tuned to the off-state peak of
    each configuration, and the off-state value is that peak resistance.
    Returns three arrays ``(f_z, r_off_state, eta)``.
    """
    ct = params.c_tuning if c_tuning is None else c_tuning
    h = params.hemt
    with np.errstate(all="ignore"):
        f_eval, r_state, eta = kernels.switch_model(
            params.c_trap, params.l1, params.l2, params.r_loss, params.c_amp,
            np.asarray(ct, dtype=float), h.r_off, h.r_on, h.c_ds,
            math.nan if f_z is None else float(f_z),
        )
    if not (np.all(np.isfinite(r_state)) and np.all(np.isfinite(eta))):
        raise SingularityError("switch model produced non-finite values")
    return f_eval, r_state, eta


def operating_frequency(params: CircuitParams) -> float:
    """Off-state Re[Z] peak of ``params``: where the electron is tuned for detection."""
    f_eval, _, _ = switch_characteristics(params)
    return float(f_eval[()])


def suppression_eta(params: CircuitParams, f_z: float | None = None) -> float:
    """Damping suppression Re[Z_off(f_z)] / Re[Z_on(f_z)].

    ``f_z=None`` evaluates at the off-state resonance of ``params``.
    """
    if f_z is None:
        f_z = operating_frequency(params)
    if not f_z > 0:
        raise DomainError(f"f_z must be > 0, got {f_z}")
    z_off = impedance(params, SwitchState.OFF, f_z)
    z_on = impedance(params, SwitchState.ON, f_z)
    if abs(z_on.real) <= 1e-12 * abs(z_on):
        raise SingularityError("Re[Z_on] vanishes; suppression undefined")
    return max(z_off.real / z_on.real, 0.0)


def calibrate_r_loss(params: CircuitParams, r_target: float) -> float:
    """r_loss that makes the off-state Re[Z] peak equal ``r_target``."""
    from dataclasses import replace

    def excess(r_loss):
        _, r_peak, _ = switch_characteristics(replace(params, r_loss=r_loss))
        return float(r_peak[()]) - r_target

    lo, hi = r_target * 0.5, r_target * 100.0
    if excess(hi) < 0:
        raise InvalidParameterError(f"off-state peak cannot reach {r_target} Ohm")
    return brentq(excess, lo, hi, xtol=1e-9 * r_target, rtol=1e-14)
