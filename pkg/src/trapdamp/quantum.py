"""QND level arithmetic and cyclotron lineshapes under axial backaction.

Frequencies are in Hz throughout; ``gamma_z`` is the axial energy damping
rate in 1/s (so ``gamma_z / 2 pi`` is the familiar Hz figure).
"""
from __future__ import annotations

import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.optimize import nnls
from scipy.signal import find_peaks

from . import _kernels as kernels
from .constants import H, HBAR, K_B, TWO_PI
from .errors import AnalysisError, CoverageError, InvalidParameterError

DISPERSIVE_THRESHOLD = 0.1


@dataclass(frozen=True)
class QuantumState:
    n_c: int
    m_s: float
    n_z: int

    def __post_init__(self):
        if int(self.n_c) != self.n_c or self.n_c < 0:
            raise InvalidParameterError(f"n_c must be a non-negative integer, got {self.n_c}")
        if int(self.n_z) != self.n_z or self.n_z < 0:
            raise InvalidParameterError(f"n_z must be a non-negative integer, got {self.n_z}")
        if self.m_s not in (-0.5, 0.5):
            raise InvalidParameterError(f"m_s must be +1/2 or -1/2, got {self.m_s}")


@dataclass(frozen=True)
class ModeFrequencies:
    f_c: float = 150.3e9
    f_s: float = 150.5e9
    f_z: float = 200e6

    def __post_init__(self):
        if not (self.f_c > 0 and self.f_s > 0 and self.f_z > 0):
            raise InvalidParameterError("mode frequencies must be > 0")
        if self.f_a == 0:
            raise InvalidParameterError("anomaly frequency f_s - f_c must be nonzero")

    @property
    def f_a(self) -> float:
        return self.f_s - self.f_c


@dataclass(frozen=True)
class BottleParams:
    delta_c: float = 3.868
    delta_s: float = 3.872

    @property
    def delta_a(self) -> float:
        return self.delta_s - self.delta_c


NO_BOTTLE = BottleParams(0.0, 0.0)


@dataclass(frozen=True)
class Lineshape:
    """Cyclotron line density (1/Hz) versus offset from the unperturbed f_c."""

    offset: np.ndarray
    density: np.ndarray

    def __post_init__(self):
        offset = np.asarray(self.offset, dtype=float)
        density = np.asarray(self.density, dtype=float)
        if offset.ndim != 1 or offset.size < 2 or density.shape != offset.shape:
            raise InvalidParameterError("lineshape needs matching 1-d arrays of length >= 2")
        if not np.all(np.diff(offset) > 0):
            raise InvalidParameterError("offsets must be strictly increasing")
        if np.any(density < 0):
            raise InvalidParameterError("density must be >= 0")
        object.__setattr__(self, "offset", offset)
        object.__setattr__(self, "density", density)

    @property
    def cell_widths(self) -> np.ndarray:
        edges = _cell_edges(self.offset)
        return np.diff(edges)

    def integral(self) -> float:
        return float(np.sum(self.density * self.cell_widths))

    def mean_offset(self) -> float:
        w = self.density * self.cell_widths
        return float(np.sum(w * self.offset) / np.sum(w))

    def l1_distance(self, other: "Lineshape") -> float:
        if other.offset.shape != self.offset.shape or not np.allclose(other.offset, self.offset):
            raise InvalidParameterError("lineshapes must share a grid")
        return float(np.sum(np.abs(self.density - other.density) * self.cell_widths))


def _cell_edges(x: np.ndarray) -> np.ndarray:
    mid = 0.5 * (x[1:] + x[:-1])
    return np.concatenate(([x[0] - (mid[0] - x[0])], mid, [x[-1] + (x[-1] - mid[-1])]))


def energy(state: QuantumState, freqs: ModeFrequencies, bottle: BottleParams) -> float:
    """Energy eigenvalue (J) including the magnetic-bottle couplings."""
    nc = state.n_c + 0.5
    nz = state.n_z + 0.5
    total_hz = (
        freqs.f_c * nc
        + freqs.f_s * state.m_s
        + freqs.f_z * nz
        + bottle.delta_c * nc * nz
        + bottle.delta_s * state.m_s * nz
    )
    return TWO_PI * HBAR * total_hz


def axial_shift(n_c: int, m_s: float, bottle: BottleParams) -> float:
    """Axial frequency shift (Hz) for cyclotron number ``n_c`` and spin ``m_s``."""
    QuantumState(n_c, m_s, 0)
    return (n_c + 0.5) * bottle.delta_c + m_s * bottle.delta_s


def backaction_shifts(n_z: int, bottle: BottleParams) -> tuple[float, float]:
    """Cyclotron and anomaly frequency shifts (Hz) caused by axial number ``n_z``."""
    if int(n_z) != n_z or n_z < 0:
        raise InvalidParameterError(f"n_z must be a non-negative integer, got {n_z}")
    return (n_z + 0.5) * bottle.delta_c, (n_z + 0.5) * bottle.delta_a


def mean_axial_quanta(temperature: float, f_z: float) -> float:
    """Classical-limit occupation k_B T / (h f_z)."""
    if not temperature >= 0:
        raise InvalidParameterError(f"temperature must be >= 0, got {temperature}")
    if not f_z > 0:
        raise InvalidParameterError(f"f_z must be > 0, got {f_z}")
    return K_B * temperature / (H * f_z)


def thermal_weight(n_z, nbar: float):
    """Geometric occupation probability with mean ``nbar``."""
    if not nbar >= 0:
        raise InvalidParameterError(f"nbar must be >= 0, got {nbar}")
    n = np.asarray(n_z)
    if nbar == 0:
        return np.where(n == 0, 1.0, 0.0)[()]
    return (np.exp(n * math.log(nbar / (nbar + 1.0))) / (nbar + 1.0))[()]


def departure_rate(n_z, nbar: float, gamma_z: float):
    """Total rate (1/s) of leaving axial state ``n_z``."""
    n = np.asarray(n_z, dtype=float)
    return (gamma_z * ((nbar + 1.0) * n + nbar * (n + 1.0)))[()]


def dispersive_ratio(nbar: float, gamma_z: float, delta_c: float) -> float:
    """nbar * gamma_z / (2 pi delta_c); resolved lines need this << 1."""
    if not delta_c > 0:
        raise InvalidParameterError(f"delta_c must be > 0, got {delta_c}")
    return nbar * gamma_z / (TWO_PI * delta_c)


def is_dispersive(nbar: float, gamma_z: float, delta_c: float) -> bool:
    return dispersive_ratio(nbar, gamma_z, delta_c) < DISPERSIVE_THRESHOLD


def _n_cutoff(nbar: float, tail: float) -> int:
    if nbar == 0:
        return 0
    return int(math.ceil(math.log(tail) / math.log(nbar / (nbar + 1.0))))


def _component_matrix(offset, nbar, delta_c, gamma_z, n_max):
    """Cell averages of unit-weight Lorentzians for n = 0..n_max, shape (n_max+1, grid)."""
    edges = _cell_edges(offset)
    widths = np.diff(edges)
    n = np.arange(n_max + 1)
    centers = (n + 0.5) * delta_c
    # Lorentzian FWHM (Hz) = departure rate / pi; half width = rate / (2 pi)
    hwhm = departure_rate(n, nbar, gamma_z) / TWO_PI
    hwhm = np.atleast_1d(hwhm)[:, None]
    x = edges[None, :] - centers[:, None]
    with np.errstate(divide="ignore", invalid="ignore"):
        cdf = np.where(hwhm > 0, np.arctan(x / np.where(hwhm > 0, hwhm, 1.0)) / math.pi + 0.5,
                       (x >= 0).astype(float))
    return np.diff(cdf, axis=1) / widths[None, :]


def lineshape_discrete(nbar: float, delta_c: float, gamma_z: float, offset) -> Lineshape:
    """Resolved-line model: one Lorentzian per axial state.

    Line n sits at ``(n + 1/2) delta_c`` with thermal weight P(n) and full
    width ``departure_rate(n) / pi`` Hz. Densities are cell averages so widths
    below the grid spacing (including gamma_z = 0) stay normalized.
    """
    if not (nbar >= 0 and gamma_z >= 0):
        raise InvalidParameterError("nbar and gamma_z must be >= 0")
    if delta_c > 0 and dispersive_ratio(nbar, gamma_z, delta_c) >= 1.0:
        warnings.warn("lines overlap (dispersive ratio >= 1): resolved-line model is unreliable",
                      stacklevel=2)
    offset = np.asarray(offset, dtype=float)
    n_max = _n_cutoff(nbar, 1e-12)
    weights = thermal_weight(np.arange(n_max + 1), nbar)
    comps = _component_matrix(offset, nbar, delta_c, gamma_z, n_max)
    density = weights @ comps
    centers = (np.arange(n_max + 1) + 0.5) * delta_c
    held = float(np.sum(weights[(centers >= offset[0]) & (centers <= offset[-1])]))
    if held < 0.999:
        raise CoverageError(
            f"grid [{offset[0]}, {offset[-1]}] Hz centers only {held:.4f} of the line weight"
        )
    shape = Lineshape(offset, density)
    return Lineshape(offset, density / shape.integral())


def _markov_resolvent(iw, diag0, up, down, p):
    """p (iw - A)^-1 1 by a Thomas sweep of the tridiagonal system, vectorized over iw."""
    n_max = diag0.size - 1
    c_prime = np.empty((n_max + 1, iw.size), dtype=complex)
    d_prime = np.empty((n_max + 1, iw.size), dtype=complex)
    b = iw + diag0[0]
    c_prime[0] = -up[0] / b
    d_prime[0] = 1.0 / b
    for k in range(1, n_max + 1):
        b = iw + diag0[k] + down[k] * c_prime[k - 1]
        c_prime[k] = -up[k] / b
        d_prime[k] = (1.0 + down[k] * d_prime[k - 1]) / b
    x = d_prime[-1]
    acc = p[-1] * x
    for k in range(n_max - 1, -1, -1):
        x = d_prime[k] - c_prime[k] * x
        acc = acc + p[k] * x
    return acc


def lineshape_markov(nbar: float, delta_c: float, gamma_z: float, offset) -> Lineshape:
    """Exact stationary spectrum of the jump process that drives the phase.

    Evaluates ``2 Re[p (i w - A)^-1 1]`` where ``A`` is the birth-death rate
    matrix plus ``i 2 pi delta_c (n + 1/2)`` on the diagonal and ``p`` the
    thermal distribution. This is the infinite-time limit of
    :func:`lineshape_monte_carlo`; unlike the Lorentzian sum it keeps the
    interference between lines, so its tails are not Lorentzian.
    """
    if not (nbar >= 0 and gamma_z > 0):
        raise InvalidParameterError("need nbar >= 0 and gamma_z > 0")
    offset = np.asarray(offset, dtype=float)
    n_max = max(_n_cutoff(nbar, 1e-12), 1)
    n = np.arange(n_max + 1, dtype=float)
    up = gamma_z * nbar * (n + 1.0)
    up[-1] = 0.0  # reflecting truncation
    down = gamma_z * (nbar + 1.0) * n
    p = thermal_weight(np.arange(n_max + 1), nbar)
    p = p / p.sum()
    diag0 = up + down - 1j * TWO_PI * delta_c * (n + 0.5)
    acc = np.concatenate([
        _markov_resolvent(1j * TWO_PI * offset[s:s + 4096], diag0, up, down, p)
        for s in range(0, offset.size, 4096)
    ])
    density = np.maximum(2.0 * acc.real, 0.0)
    return Lineshape(offset, density)


def _default_sampling(nbar, delta_c, t_total, f_center, sample_rate):
    if f_center is None:
        f_center = (nbar + 0.5) * delta_c
    if sample_rate is None:
        # cover the thermal tail to 1e-4 on both sides of the center
        n_hi = _n_cutoff(nbar, 1e-4)
        reach = max(abs((n_hi + 0.5) * delta_c - f_center), abs(0.5 * delta_c - f_center), 1.0)
        sample_rate = float(2 ** math.ceil(math.log2(2.5 * reach)))
    n_samples = int(round(t_total * sample_rate))
    return f_center, sample_rate, n_samples


def _trajectory_stream(seed: int, index: int) -> np.random.Generator:
    # counter-style substream: independent of batching and thread schedule
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def _initial_and_uniforms(seed, index, nbar, n_uniform, n_start, n_strata=None):
    rng = _trajectory_stream(seed, index)
    u0 = rng.random()
    if n_strata:
        # stratified initial state: trajectory i draws from [i, i+1) / n_strata
        u0 = (index + u0) / n_strata
    if n_start is not None:
        n0 = int(n_start)
    elif nbar == 0:
        n0 = 0
    else:
        n0 = int(math.floor(math.log1p(-u0) / math.log(nbar / (nbar + 1.0))))
    return n0, rng.random(n_uniform)


def _run_batch(indices, seed, nbar, delta_c, gamma_z, f_center, dt, n_samples, t_total, n_start,
               n_strata=None):
    expected = gamma_z * 2.0 * nbar * (nbar + 1.0) * t_total + 2.0 * gamma_z * t_total * nbar
    n_uniform = 2 * int(expected * 1.3 + 10.0 * math.sqrt(expected + 1.0) + 16)
    while True:
        rows = [_initial_and_uniforms(seed, i, nbar, n_uniform, n_start, n_strata) for i in indices]
        n0 = np.array([r[0] for r in rows], dtype=np.int64)
        u = np.stack([r[1] for r in rows])
        signal, n_end, used = kernels.jump_phase_batch(
            n0, u, gamma_z, nbar, delta_c, f_center, dt, n_samples
        )
        if np.all(used >= 0):
            return signal, n_end
        n_uniform *= 2


def _threads(threads):
    if threads is not None:
        return max(1, int(threads))
    env = os.environ.get("TRAPDAMP_THREADS")
    return max(1, int(env)) if env else 1


def lineshape_monte_carlo(
    nbar: float,
    delta_c: float,
    gamma_z: float,
    t_total: float,
    n_traj: int,
    seed: int,
    sample_rate: float | None = None,
    f_center: float | None = None,
    batch_size: int = 64,
    threads: int | None = None,
) -> Lineshape:
    """Spectral-diffusion lineshape from simulated axial jump trajectories.

    Each trajectory starts from a thermal n, evolves as a birth-death process
    and accumulates the cyclotron phase 2 pi delta_c (n + 1/2) t. Initial
    states are stratified over the thermal distribution. The result
    is the trajectory-averaged Hann-windowed periodogram of exp(i phase),
    normalized to unit area. Deterministic for a given ``seed`` whatever the
    thread count.
    """
    if not (nbar >= 0 and gamma_z >= 0):
        raise InvalidParameterError("nbar and gamma_z must be >= 0")
    if not t_total > 0:
        raise InvalidParameterError("t_total must be > 0")
    if int(n_traj) < 1:
        raise InvalidParameterError("n_traj must be >= 1")
    f_center, sample_rate, n_samples = _default_sampling(nbar, delta_c, t_total, f_center, sample_rate)
    if n_samples < 16:
        raise InvalidParameterError("t_total * sample_rate too small for a spectrum")
    dt = 1.0 / sample_rate
    window = np.hanning(n_samples)
    batches = [range(s, min(s + batch_size, n_traj)) for s in range(0, n_traj, batch_size)]

    def work(indices):
        signal, _ = _run_batch(
            indices, seed, nbar, delta_c, gamma_z, f_center, dt, n_samples, t_total, None, n_traj
        )
        spec = np.fft.fft(signal * window, axis=1)
        return np.sum(spec.real**2 + spec.imag**2, axis=0)

    n_workers = _threads(threads)
    if n_workers == 1:
        parts = [work(b) for b in batches]
    else:
        with ThreadPoolExecutor(n_workers) as pool:
            parts = list(pool.map(work, batches))
    power = np.zeros(n_samples)
    for part in parts:  # fixed reduction order
        power += part
    freqs = np.fft.fftfreq(n_samples, dt)
    order = np.argsort(freqs, kind="stable")
    offset = freqs[order] + f_center
    density = power[order]
    density /= np.sum(density) * (sample_rate / n_samples)
    return Lineshape(offset, density)


def sample_axial_occupation(
    nbar: float,
    gamma_z: float,
    t_total: float,
    n_traj: int,
    seed: int,
    n_start: int | None = 0,
) -> np.ndarray:
    """Axial number at ``t_total`` for independent jump trajectories.

    ``n_start=None`` draws the initial state from the thermal distribution.
    """
    if not (nbar >= 0 and gamma_z >= 0 and t_total > 0):
        raise InvalidParameterError("need nbar >= 0, gamma_z >= 0, t_total > 0")
    out = []
    for start in range(0, n_traj, 256):
        idx = range(start, min(start + 256, n_traj))
        _, n_end = _run_batch(idx, seed, nbar, 1.0, gamma_z, 0.0, t_total, 2, t_total, n_start)
        out.append(n_end)
    return np.concatenate(out)


# analysis of computed lineshapes ------------------------------------------------


def peak_offsets(shape: Lineshape, min_prominence: float = 0.02) -> np.ndarray:
    """Offsets of local maxima whose prominence exceeds a fraction of the maximum."""
    d = shape.density
    idx, _ = find_peaks(d, prominence=min_prominence * d.max())
    centers = []
    for i in idx:
        if 0 < i < d.size - 1:
            y0, y1, y2 = d[i - 1], d[i], d[i + 1]
            curv = y0 - 2 * y1 + y2
            frac = 0.5 * (y0 - y2) / curv if curv < 0 else 0.0
            step = shape.offset[i + 1] - shape.offset[i]
            centers.append(shape.offset[i] + frac * step)
        else:
            centers.append(shape.offset[i])
    return np.array(centers)


def peak_fwhm(shape: Lineshape, near: float) -> float:
    """Full width at half maximum of the local peak closest to offset ``near``."""
    d = shape.density
    idx, _ = find_peaks(d)
    if idx.size == 0:
        raise AnalysisError("lineshape has no peak")
    i = int(idx[np.argmin(np.abs(shape.offset[idx] - near))])
    half = 0.5 * d[i]
    edges = []
    for direction in (-1, 1):
        j = i
        while 0 <= j + direction < d.size and d[j + direction] > half:
            j += direction
        k = j + direction
        if not 0 <= k < d.size:
            raise AnalysisError("peak not enclosed by the grid")
        frac = (d[j] - half) / (d[j] - d[k])
        edges.append(shape.offset[j] + frac * (shape.offset[k] - shape.offset[j]))
    return edges[1] - edges[0]


def peak_half_widths(shape: Lineshape) -> tuple[float, float, float]:
    """(peak offset, left half-width, right half-width) of the global maximum."""
    d = shape.density
    i = int(np.argmax(d))
    half = 0.5 * d[i]
    left = np.nonzero(d[:i] <= half)[0]
    right = np.nonzero(d[i:] <= half)[0]
    if left.size == 0 or right.size == 0:
        raise AnalysisError("peak not enclosed by the grid")
    x = shape.offset
    return x[i], x[i] - x[left[-1]], x[i + right[0]] - x[i]


def resolved_peak_weights(shape: Lineshape, nbar: float, delta_c: float, gamma_z: float) -> np.ndarray:
    """Non-negative least-squares weights of the per-state line components.

    The component shapes are those of :func:`lineshape_discrete`; the weights
    are free, so they measure how much of ``shape`` sits in each line.
    """
    n_max = _n_cutoff(nbar, 1e-6)
    comps = _component_matrix(shape.offset, nbar, delta_c, gamma_z, n_max)
    sw = np.sqrt(shape.cell_widths)
    weights, _ = nnls((comps * sw).T, shape.density * sw)
    return weights
