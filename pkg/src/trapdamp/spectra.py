"""Observable signals: Johnson-noise dip spectra and shunt-through transmission."""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field
from typing import Callable, Union

import numpy as np

from .circuit import ImpedanceTrace
from .constants import K_B, TWO_PI
from .errors import AnalysisError, DomainError, InvalidParameterError, SingularityError
from .particle import ParticleEnsemble, TrapGeometry, electron_series_lc

ImpedanceLike = Union[complex, float, Callable]

PSD_UNIT = "V^2/Hz"
NORMALIZED_UNIT = "normalized"


def _as_increasing(freq):
    freq = np.asarray(freq, dtype=float)
    if freq.ndim != 1 or freq.size == 0:
        raise InvalidParameterError("frequency grid must be a nonempty 1-d array")
    if freq.size > 1 and not np.all(np.diff(freq) > 0):
        raise InvalidParameterError("frequencies must be strictly increasing")
    return freq


@dataclass(frozen=True)
class Spectrum:
    """Real spectrum on a frequency grid.

    ``baseline`` optionally holds the same spectrum without particles and is
    the reference level for :func:`dip_fwhm`.
    """

    freq: np.ndarray
    value: np.ndarray
    unit: str = PSD_UNIT
    baseline: np.ndarray | None = field(default=None)

    def __post_init__(self):
        freq = _as_increasing(self.freq)
        value = np.asarray(self.value, dtype=float)
        if value.shape != freq.shape:
            raise InvalidParameterError("freq and value must have the same length")
        if self.unit == PSD_UNIT and np.any(value < 0):
            raise InvalidParameterError("power spectral density must be >= 0")
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "value", value)
        if self.baseline is not None:
            base = np.asarray(self.baseline, dtype=float)
            if base.shape != freq.shape:
                raise InvalidParameterError("baseline must match the grid")
            object.__setattr__(self, "baseline", base)

    def normalized(self) -> "Spectrum":
        """Scaled so the maximum is 1 (absolute calibration is not meaningful)."""
        scale = self.value.max()
        base = None if self.baseline is None else self.baseline / scale
        return Spectrum(self.freq, self.value / scale, NORMALIZED_UNIT, base)


@dataclass(frozen=True)
class TransmissionTrace:
    freq: np.ndarray
    s21: np.ndarray
    weak_coupling: bool = True

    def __post_init__(self):
        freq = _as_increasing(self.freq)
        s21 = np.asarray(self.s21, dtype=complex)
        if s21.shape != freq.shape:
            raise InvalidParameterError("freq and s21 must have the same length")
        object.__setattr__(self, "freq", freq)
        object.__setattr__(self, "s21", s21)


@dataclass(frozen=True)
class SourceImpedance:
    z0_prime: float

    def __post_init__(self):
        if not self.z0_prime > 0:
            raise InvalidParameterError(f"source impedance must be > 0, got {self.z0_prime}")


def _evaluate(z: ImpedanceLike, freq: np.ndarray) -> np.ndarray:
    if callable(z):
        return np.asarray(z(freq), dtype=complex) * np.ones(freq.shape)
    return np.full(freq.shape, complex(z))


def johnson_psd(z: ImpedanceLike, temperature: float, freq) -> Spectrum:
    """Thermal voltage noise 4 k_B T Re[Z]."""
    if not temperature > 0:
        raise DomainError(f"temperature must be > 0, got {temperature}")
    freq = _as_increasing(freq)
    return Spectrum(freq, 4.0 * K_B * temperature * np.maximum(_evaluate(z, freq).real, 0.0))


def dip_spectrum(
    z: ImpedanceLike,
    geom: TrapGeometry,
    ens: ParticleEnsemble | None,
    f_z: float,
    temperature: float,
    freq,
) -> Spectrum:
    """Noise spectrum of the tank shunted by the particles' series-LC branch.

    ``z`` is the circuit impedance: a constant or a callable of frequency (Hz).
    ``ens=None`` gives the particle-free spectrum. The returned spectrum
    carries that particle-free spectrum as its baseline.
    """
    freq = _as_increasing(freq)
    if not temperature > 0:
        raise DomainError(f"temperature must be > 0, got {temperature}")
    if not freq[0] < f_z < freq[-1]:
        raise DomainError(f"grid [{freq[0]}, {freq[-1]}] does not bracket f_z={f_z}")
    z_circ = _evaluate(z, freq)
    scale = 4.0 * K_B * temperature
    baseline = scale * np.maximum(z_circ.real, 0.0)
    if ens is None:
        return Spectrum(freq, baseline, PSD_UNIT, baseline)
    l_e, _ = electron_series_lc(geom, ens, f_z)
    omega = TWO_PI * freq
    # series LC reactance l_e (w^2 - w_z^2)/w, with the difference formed in Hz
    x_e = l_e * TWO_PI * (freq - f_z) * TWO_PI * (freq + f_z) / omega
    z_e = 1j * x_e
    with np.errstate(invalid="ignore", divide="ignore"):
        z_tot = z_circ * z_e / (z_circ + z_e)
    z_tot = np.where(z_e == 0, 0.0, z_tot)
    return Spectrum(freq, scale * np.maximum(z_tot.real, 0.0), PSD_UNIT, baseline)


def _crossing(freq, ratio, i_min, level, direction):
    j = i_min
    while 0 <= j + direction < freq.size and ratio[j + direction] < level:
        j += direction
    k = j + direction
    if not 0 <= k < freq.size:
        raise AnalysisError("dip is not enclosed by the grid")
    frac = (level - ratio[j]) / (ratio[k] - ratio[j])
    return freq[j] + frac * (freq[k] - freq[j])


def dip_fwhm(spec: Spectrum) -> float:
    """Full width of the dip at half depth, in Hz.

    Depth is measured against ``spec.baseline`` when present, otherwise
    against the straight line joining the highest points on either side of
    the minimum. Crossings are linearly interpolated.
    """
    freq, value = spec.freq, spec.value
    if freq.size < 3:
        raise AnalysisError("spectrum too short for a dip")
    if spec.baseline is not None:
        base = spec.baseline
    else:
        i0 = int(np.argmin(value))
        if i0 in (0, freq.size - 1):
            raise AnalysisError("no interior dip")
        il = int(np.argmax(value[:i0]))
        ir = i0 + int(np.argmax(value[i0:]))
        base = np.interp(freq, [freq[il], freq[ir]], [value[il], value[ir]])
    if np.any(base <= 0):
        raise AnalysisError("baseline must be positive")
    ratio = value / base
    i_min = int(np.argmin(ratio))
    if i_min in (0, freq.size - 1):
        raise AnalysisError("no interior dip")
    r_min = ratio[i_min]
    if not r_min < 1 - 1e-9:
        raise AnalysisError("no dip below the baseline")
    level = 0.5 * (1.0 + r_min)
    return _crossing(freq, ratio, i_min, level, +1) - _crossing(freq, ratio, i_min, level, -1)


def shunt_through_s21(
    z: ImpedanceLike | ImpedanceTrace, src: SourceImpedance, freq=None
) -> TransmissionTrace:
    """Transmission V_out/V_in = Z / (Z0' + 2 Z) of the weakly coupled two-port.

    ``weak_coupling`` is False (and a warning is raised) where |Z| > Z0'/10.
    """
    if isinstance(z, ImpedanceTrace):
        freq, zv = z.freq, z.z
    else:
        if freq is None:
            raise InvalidParameterError("a frequency grid is required")
        freq = _as_increasing(freq)
        zv = _evaluate(z, freq)
    s21 = zv / (src.z0_prime + 2.0 * zv)
    weak = bool(np.all(np.abs(zv) <= src.z0_prime / 10.0))
    if not weak:
        warnings.warn("|Z| exceeds Z0'/10: shunt-through relation outside weak coupling", stacklevel=2)
    return TransmissionTrace(freq, s21, weak)


def impedance_from_s21(trace: TransmissionTrace, src: SourceImpedance, tol: float = 1e-12) -> ImpedanceTrace:
    """Invert the shunt-through relation: Z = Z0' s / (1 - 2 s)."""
    denom = 1.0 - 2.0 * trace.s21
    bad = np.abs(denom) <= tol
    if np.any(bad):
        f_bad = trace.freq[np.argmax(bad)]
        raise SingularityError(f"s21 = 1/2 at {f_bad} Hz; impedance unbounded")
    return ImpedanceTrace(trace.freq, src.z0_prime * trace.s21 / denom)


def divider_source_impedance(c_couple: float, c_shunt: float, z_line: float = 50.0) -> SourceImpedance:
    """Line impedance seen through a c_couple / c_shunt capacitive divider."""
    if not (c_couple > 0 and c_shunt > 0):
        raise InvalidParameterError("divider capacitances must be > 0")
    return SourceImpedance((c_shunt / c_couple) ** 2 * z_line)
