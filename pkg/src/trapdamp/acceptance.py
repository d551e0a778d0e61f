"""Acceptance suite: one check per criterion, each with its tolerance and time budget.

Every check returns a :class:`CriterionResult`. ``details`` holds only
deterministic numbers, so a report written from it is reproducible byte for
byte; wall time is kept separately in ``elapsed``.
"""
from __future__ import annotations

import math
import time
import warnings
from dataclasses import dataclass, field

import numpy as np

from . import circuit, inference, particle, quantum, spectra
from .constants import TWO_PI

FIG7_NBAR = 10.0
FIG7_DELTA_C = 4.0
FIG7_MEAN = (FIG7_NBAR + 0.5) * FIG7_DELTA_C


@dataclass
class CriterionResult:
    number: int
    title: str
    passed: bool
    details: dict
    budget_s: float
    elapsed: float = 0.0
    notes: list = field(default_factory=list)

    def line(self) -> str:
        status = "PASS" if self.passed else "FAIL"
        parts = ", ".join(f"{k}={_short(v)}" for k, v in self.details.items())
        return f"[{status}] {self.number:2d}. {self.title}: {parts} ({self.elapsed:.1f} s / {self.budget_s:g} s)"

    def to_json(self) -> dict:
        return {
            "criterion": self.number,
            "title": self.title,
            "passed": bool(self.passed),
            "details": {k: _plain(v) for k, v in self.details.items()},
            "notes": list(self.notes),
        }


def _short(v):
    if isinstance(v, float):
        return f"{v:.6g}"
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_short(x) for x in v) + "]"
    return str(v)


def _plain(v):
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, (np.bool_,)):
        return bool(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_plain(x) for x in v]
    return v


def _rel(a, b):
    return abs(a / b - 1.0)


def c01_thermal_occupation() -> CriterionResult:
    nbar = quantum.mean_axial_quanta(0.1, 200e6)
    ok = abs(nbar - 10.42) <= 0.01
    return CriterionResult(1, "thermal occupation", ok, {"nbar": nbar, "target": 10.42}, 1.0)


def c02_source_impedance() -> CriterionResult:
    z = spectra.divider_source_impedance(0.2e-12, 100e-12, 50.0).z0_prime
    ok = math.isclose(z, 12.5e6, rel_tol=1e-12)
    return CriterionResult(2, "source impedance", ok, {"z0_prime_ohm": z}, 1.0)


def c03_tank_resonance() -> CriterionResult:
    params = circuit.CircuitParams(c_tuning=0.0)
    f_rlc = 1.0 / (TWO_PI * math.sqrt(70e-9 * 8.2e-12))
    f_pk, r_pk = circuit.resonance_peak(params, "off")
    ok = _rel(f_pk, f_rlc) <= 1e-3 and _rel(f_pk, 210.1e6) <= 1e-3 and _rel(r_pk, params.r_loss) <= 1e-3
    return CriterionResult(
        3, "tank resonance", ok,
        {"f_peak_hz": f_pk, "f_rlc_hz": f_rlc, "r_peak_ohm": r_pk, "r_loss_ohm": params.r_loss}, 1.0,
    )


def c04_r_q_consistency() -> CriterionResult:
    worst = 0.0
    for f0, q, l in [(215.3e6, 800.0, 70e-9), (150e6, 300.0, 120e-9), (240e6, 2000.0, 40e-9)]:
        r, c = circuit.parallel_rlc_for(f0, q, l)
        f = np.linspace(f0 * (1 - 6 / q), f0 * (1 + 6 / q), 801)
        trace = circuit.ImpedanceTrace(f, circuit.parallel_rlc_impedance(r, l, c, f))
        s = circuit.characterize_resonance(trace, l_total=l)
        worst = max(worst, _rel(s.f0, f0), _rel(s.q, q), _rel(s.r_parallel, r))
        if f0 == 215.3e6:
            r_main = s.r_parallel
    ok = worst <= 5e-3 and _rel(r_main, 75.8e3) <= 5e-3
    return CriterionResult(4, "R = Q w L consistency", ok, {"worst_rel_err": worst, "r_fit_ohm": r_main}, 1.0)


def _dip_width(z, n, f_z, geom):
    ens = particle.ParticleEnsemble(n)
    gamma = n * particle.damping_rate(geom, particle.ParticleEnsemble(1), _re_at(z, f_z))
    width = gamma / TWO_PI
    f = f_z + np.linspace(-8.0, 8.0, 16001) * width
    spec = spectra.dip_spectrum(z, geom, ens, f_z, 4.2, f)
    return spectra.dip_fwhm(spec), width


def _re_at(z, f):
    return complex(z(f)).real if callable(z) else complex(z).real


def c05_dip_law() -> CriterionResult:
    """The width law assumes a resistive circuit across the dip: checked on R = 83 kOhm.

    The full tank is also reported: its reactance slope narrows very wide dips.
    """
    geom = particle.TrapGeometry()
    params = circuit.CircuitParams()
    f_z = circuit.operating_frequency(params)
    r_peak = circuit.impedance(params, "off", f_z).real
    worst = 0.0
    for n in (1, 10, 100, 1500):
        fwhm, expected = _dip_width(r_peak, n, f_z, geom)
        worst = max(worst, _rel(fwhm, expected))
    z_tank = circuit.impedance_func(params, "off")
    tank_err = [_rel(*_dip_width(z_tank, n, f_z, geom)) for n in (1, 1500)]
    widths = [_dip_width(r, 1, f_z, geom)[0] for r in (36e3, 19e3, 7.6e3)]
    ratio_err = max(_rel(widths[1] / widths[0], 19 / 36), _rel(widths[2] / widths[0], 7.6 / 36))
    ok = worst <= 0.02 and ratio_err <= 0.05
    return CriterionResult(
        5, "dip law", ok,
        {"worst_fwhm_rel_err": worst, "ratio_rel_err": ratio_err,
         "full_tank_rel_err_n1": tank_err[0], "full_tank_rel_err_n1500": tank_err[1]}, 10.0,
    )


def c06_shunt_round_trip() -> CriterionResult:
    params = circuit.CircuitParams()
    f = np.linspace(150e6, 270e6, 10_000)
    trace = circuit.ImpedanceTrace(f, circuit.impedance(params, "off", f))
    src = spectra.SourceImpedance(12.5e6)
    back = spectra.impedance_from_s21(spectra.shunt_through_s21(trace, src), src)
    err = float(np.max(np.abs(back.z - trace.z) / np.abs(trace.z)))
    return CriterionResult(6, "shunt-through round trip", err <= 1e-9, {"max_rel_err": err}, 1.0)


def c07_hemt_round_trip(n_seeds: int = 100, n_points: int = 200) -> CriterionResult:
    truth = circuit.HemtModel(65e3, 9.6, 1.8e-12)
    params = circuit.CircuitParams(hemt=truth)
    grid = np.geomspace(1e-12, 200e-12, n_points)
    worst = np.zeros(3)
    failures = 0
    for seed in range(n_seeds):
        data = inference.synthetic_measurements(params, grid, noise=0.01, seed=seed)
        fit = inference.fit_hemt_model(data, params, seed=seed)
        h = fit.hemt
        err = np.abs([h.r_off / truth.r_off - 1, h.r_on / truth.r_on - 1, h.c_ds / truth.c_ds - 1])
        worst = np.maximum(worst, err)
        failures += int(np.any(err > 0.05))
    return CriterionResult(
        7, "HEMT fit round trip", failures == 0,
        {"seeds": n_seeds, "seeds_outside_5pct": failures,
         "worst_r_off": worst[0], "worst_r_on": worst[1], "worst_c_ds": worst[2]}, 30.0,
    )


def c08_suppression_trend() -> CriterionResult:
    params = circuit.CircuitParams()
    grid = np.geomspace(1e-12, 200e-12, 200)
    _, _, eta = circuit.switch_characteristics(params, grid)
    nondecreasing = bool(np.all(np.diff(eta) >= 0))
    _, _, ends = circuit.switch_characteristics(params, np.array([1e-12, 10e-12, 20e-12, 200e-12]))
    first_decade = math.log(ends[1] / ends[0])
    last_decade = math.log(ends[3] / ends[2])
    saturating = last_decade < 0.25 * first_decade
    _, _, pair = circuit.switch_characteristics(params, np.array([2.1e-12, 180e-12]))
    ratio = pair[1] / pair[0]
    ok = nondecreasing and saturating and ratio >= 5
    return CriterionResult(
        8, "suppression trend", ok,
        {"nondecreasing": nondecreasing, "log_gain_first_decade": first_decade,
         "log_gain_last_decade": last_decade, "eta_2p1pF": pair[0], "eta_180pF": pair[1],
         "ratio": ratio}, 5.0,
    )


def c09_dynamics() -> CriterionResult:
    ens = particle.ParticleEnsemble()
    mode = particle.AxialMode(f_z=1e6, gamma_z=2e4)
    t, z, v = particle.integrate_motion(mode, ens, 10.0 / mode.gamma_z, z0=1e-6)
    slope = particle.log_envelope_slope(t, z, v, mode.omega_z)
    slope_err = _rel(slope, -0.5 * mode.gamma_z)
    drive = particle.DriveForce(1e-20, mode.f_z)
    t, z, v = particle.integrate_motion(mode, ens, 30.0 / mode.gamma_z, drive=drive)
    tail = t >= t[-1] - 5.0 / mode.f_z
    amp = float(np.max(np.hypot(z[tail], v[tail] / mode.omega_z)))
    expected = drive.amplitude / (ens.mass * mode.gamma_z * mode.omega_z)
    amp_err = _rel(amp, expected)
    ok = slope_err <= 0.01 and amp_err <= 0.01
    return CriterionResult(9, "dynamics oracles", ok, {"slope_rel_err": slope_err, "amp_rel_err": amp_err}, 10.0)


def c10_lineshapes(n_traj: int = 10_000, seed: int = 1, t_total: tuple = (32.0, 8.0)) -> CriterionResult:
    nbar, dc = FIG7_NBAR, FIG7_DELTA_C
    g_a, g_b = TWO_PI * 0.01, TWO_PI * 1.0
    a = quantum.lineshape_monte_carlo(nbar, dc, g_a, t_total[0], n_traj, seed)
    b = quantum.lineshape_monte_carlo(nbar, dc, g_b, t_total[1], n_traj, seed + 1)

    peaks = quantum.peak_offsets(a)
    first = peaks[peaks > 0][:6]
    spacings = np.diff(first)
    spacing_ok = spacings.size >= 4 and bool(np.all(np.abs(spacings - 4.0) <= 0.4))
    w = quantum.resolved_peak_weights(a, nbar, dc, g_a)
    ratios = w[1:5] / w[:4]
    ratio_ok = bool(np.all(np.abs(ratios - 0.91) <= 0.05))
    discrete = quantum.lineshape_discrete(nbar, dc, g_a, a.offset)
    l1 = a.l1_distance(discrete)
    exact = quantum.lineshape_markov(nbar, dc, g_a, a.offset)
    l1_exact = a.l1_distance(exact)
    part_a = spacing_ok and ratio_ok and l1 < 0.05

    n_env = quantum.peak_offsets(b, min_prominence=0.05).size
    _, left, right = quantum.peak_half_widths(b)
    part_b = n_env == 1 and right > 1.5 * left

    fwhm_b = left + right
    fwhm_a0 = quantum.peak_fwhm(a, 0.5 * dc)
    part_c = fwhm_b / fwhm_a0 >= 50

    means = (a.mean_offset(), b.mean_offset())
    part_d = all(abs(m - FIG7_MEAN) <= 1.0 for m in means)

    res = CriterionResult(
        10, "lineshape regimes", part_a and part_b and part_c and part_d,
        {"a_spacings_hz": list(spacings), "a_weight_ratios": list(ratios),
         "a_l1_vs_discrete": l1, "a_l1_vs_exact_process": l1_exact,
         "b_envelope_peaks": n_env, "b_right_over_left": right / left,
         "c_fwhm_ratio": fwhm_b / fwhm_a0, "d_mean_a_hz": means[0], "d_mean_b_hz": means[1],
         "parts_abcd": [part_a, part_b, part_c, part_d]}, 120.0,
    )
    if l1 >= 0.05:
        res.notes.append(
            "the Lorentzian-sum model differs from the exact jump-process spectrum by "
            f"L1={exact.l1_distance(discrete):.4f} on this grid; the Monte Carlo tracks the exact spectrum"
        )
    return res


CHECKS = {
    1: c01_thermal_occupation,
    2: c02_source_impedance,
    3: c03_tank_resonance,
    4: c04_r_q_consistency,
    5: c05_dip_law,
    6: c06_shunt_round_trip,
    7: c07_hemt_round_trip,
    8: c08_suppression_trend,
    9: c09_dynamics,
    10: c10_lineshapes,
}


def run_criterion(number: int, **kwargs) -> CriterionResult:
    start = time.perf_counter()
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        result = CHECKS[number](**kwargs)
    result.elapsed = time.perf_counter() - start
    return result


def run_all(seed: int = 1, n_traj: int = 10_000, select=None) -> list[CriterionResult]:
    results = []
    for number in sorted(CHECKS) if select is None else select:
        kwargs = {"seed": seed, "n_traj": n_traj} if number == 10 else {}
        results.append(run_criterion(number, **kwargs))
    return results
