"""Axial motion of trapped particles coupled to the detection circuit."""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Callable, Union

import numpy as np

from . import _kernels as kernels
from .constants import E_CHARGE, M_ELECTRON, TWO_PI
from .errors import DomainError, InvalidParameterError, SingularityError

ImpedanceLike = Union[complex, float, Callable]


@dataclass(frozen=True)
class ParticleEnsemble:
    n: int = 1
    charge: float = E_CHARGE
    mass: float = M_ELECTRON

    def __post_init__(self):
        if int(self.n) != self.n or self.n < 1:
            raise InvalidParameterError(f"particle count must be an integer >= 1, got {self.n}")
        if not self.mass > 0:
            raise InvalidParameterError(f"mass must be > 0, got {self.mass}")
        if self.charge == 0 or not math.isfinite(self.charge):
            raise InvalidParameterError("charge must be finite and nonzero")


@dataclass(frozen=True)
class TrapGeometry:
    z0: float = 3.5e-3
    kappa: float = 0.8

    def __post_init__(self):
        if not self.z0 > 0:
            raise InvalidParameterError(f"z0 must be > 0, got {self.z0}")
        if not 0 < self.kappa <= 1:
            raise InvalidParameterError(f"kappa must lie in (0, 1], got {self.kappa}")


@dataclass(frozen=True)
class AxialMode:
    f_z: float
    gamma_z: float = 0.0

    def __post_init__(self):
        if not self.f_z > 0:
            raise InvalidParameterError(f"f_z must be > 0, got {self.f_z}")
        if not self.gamma_z >= 0:
            raise InvalidParameterError(f"gamma_z must be >= 0, got {self.gamma_z}")

    @property
    def omega_z(self) -> float:
        return TWO_PI * self.f_z


@dataclass(frozen=True)
class DriveForce:
    amplitude: float
    frequency: float

    def __post_init__(self):
        if not self.amplitude >= 0:
            raise InvalidParameterError(f"drive amplitude must be >= 0, got {self.amplitude}")
        if not self.frequency > 0:
            raise InvalidParameterError(f"drive frequency must be > 0, got {self.frequency}")


def coupling(geom: TrapGeometry, ens: ParticleEnsemble) -> float:
    """Single-particle coupling e*kappa/(2 z0), in C/m."""
    return ens.charge * geom.kappa / (2.0 * geom.z0)


def induced_current(geom: TrapGeometry, ens: ParticleEnsemble, z_amplitude, f: float):
    """Complex current amplitude induced by an axial displacement amplitude.

    For an ensemble the displacement is the center-of-mass amplitude and the
    current is ``n`` times the single-particle value.
    """
    if not f > 0:
        raise DomainError(f"frequency must be > 0, got {f}")
    return 1j * TWO_PI * f * ens.n * coupling(geom, ens) * np.asarray(z_amplitude, dtype=complex)[()]


def damping_rate(geom: TrapGeometry, ens: ParticleEnsemble, r: float) -> float:
    """Energy damping rate (1/s) of one particle on a resistance ``r``."""
    if not r >= 0:
        raise DomainError(f"resistance must be >= 0, got {r}")
    return coupling(geom, ens) ** 2 * r / ens.mass


def _impedance_at(z: ImpedanceLike, f: float) -> complex:
    return complex(z(f)) if callable(z) else complex(z)


def axial_response(
    mode: AxialMode,
    ens: ParticleEnsemble,
    z_of_omega: ImpedanceLike,
    r_ref: float,
    drive: DriveForce,
) -> complex:
    """Steady-state complex displacement for a drive ``F0 cos(w t)``.

    ``z_of_omega`` is a constant impedance or a callable of frequency in Hz.
    The phase is relative to the drive force.
    """
    if not r_ref > 0:
        raise DomainError(f"r_ref must be > 0, got {r_ref}")
    omega = TWO_PI * drive.frequency
    z = _impedance_at(z_of_omega, drive.frequency)
    # (w_z^2 - w^2) formed as a product to keep precision near resonance
    detune = (mode.omega_z - omega) * (mode.omega_z + omega)
    denom = detune + 1j * omega * mode.gamma_z * z / r_ref
    if drive.amplitude == 0:
        return 0j
    if denom == 0:
        raise SingularityError("undamped drive at exact resonance")
    return (drive.amplitude / ens.mass) / denom


def drive_power(drive: DriveForce, z_amplitude: complex) -> float:
    """Cycle-averaged power delivered by the drive to a displacement amplitude."""
    velocity = 1j * TWO_PI * drive.frequency * z_amplitude
    return 0.5 * (drive.amplitude * np.conj(velocity)).real


def free_decay(mode: AxialMode, z_init: float, t):
    """Amplitude envelope of an undriven oscillation."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be >= 0")
    return (z_init * np.exp(-0.5 * mode.gamma_z * t))[()]


def energy_decay(mode: AxialMode, e_init: float, t):
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise DomainError("time must be >= 0")
    return (e_init * np.exp(-mode.gamma_z * t))[()]


def mean_signal_power(mode: AxialMode, ens: ParticleEnsemble, amplitude: float) -> float:
    """Cycle average of m * gamma_z * zdot^2 for ``z = A cos(w_z t)``."""
    if not amplitude >= 0:
        raise DomainError(f"amplitude must be >= 0, got {amplitude}")
    return 0.5 * ens.mass * mode.gamma_z * mode.omega_z**2 * amplitude**2


def electron_series_lc(geom: TrapGeometry, ens: ParticleEnsemble, f_z: float) -> tuple[float, float]:
    """Series (L, C) equivalent of ``ens.n`` particles' center-of-mass motion."""
    if not f_z > 0:
        raise DomainError(f"f_z must be > 0, got {f_z}")
    l_e = ens.mass / coupling(geom, ens) ** 2 / ens.n
    c_e = 1.0 / (l_e * (TWO_PI * f_z) ** 2)
    return l_e, c_e


def integrate_motion(
    mode: AxialMode,
    ens: ParticleEnsemble,
    t_total: float,
    drive: DriveForce | None = None,
    z0: float = 0.0,
    v0: float = 0.0,
    steps_per_period: int = 64,
):
    """Fixed-step RK4 of ``z'' + gamma_z z' + w_z^2 z = (F0/m) cos(w t)``.

    The circuit is taken as purely resistive at ``gamma_z``. Returns
    ``(t, z, v)`` arrays including the initial point.
    """
    if not t_total > 0:
        raise DomainError("t_total must be > 0")
    dt = 1.0 / (mode.f_z * steps_per_period)
    n_steps = int(math.ceil(t_total / dt))
    accel = 0.0 if drive is None else drive.amplitude / ens.mass
    omega_d = 0.0 if drive is None else TWO_PI * drive.frequency
    z, v = kernels.rk4_driven(z0, v0, mode.omega_z, mode.gamma_z, accel, omega_d, dt, n_steps)
    return np.arange(n_steps + 1) * dt, z, v


def log_envelope_slope(t, z, v, omega_z: float) -> float:
    """Least-squares slope of ln sqrt(z^2 + (v/w_z)^2) versus t."""
    amp = np.hypot(z, np.asarray(v) / omega_z)
    slope, _ = np.polyfit(np.asarray(t), np.log(amp), 1)
    return float(slope)
