import math
import warnings

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from trapdamp import circuit, particle, spectra
from trapdamp.constants import K_B, TWO_PI
from trapdamp.errors import AnalysisError, DomainError, InvalidParameterError, SingularityError
from trapdamp.spectra import SourceImpedance, Spectrum, TransmissionTrace

GEOM = particle.TrapGeometry()
F_Z = 200e6
Z0P = SourceImpedance(12.5e6)


def _gamma(r, n=1):
    return n * particle.damping_rate(GEOM, particle.ParticleEnsemble(1), r)


def _dip(z, n, r_ref, span=8.0, points=16001, temperature=4.2):
    width = _gamma(r_ref, n) / TWO_PI
    f = F_Z + np.linspace(-span, span, points) * width
    return spectra.dip_spectrum(z, GEOM, particle.ParticleEnsemble(n), F_Z, temperature, f), width


class TestTypes:
    def test_spectrum_validation(self):
        with pytest.raises(InvalidParameterError):
            Spectrum([1.0, 1.0], [0.0, 0.0])
        with pytest.raises(InvalidParameterError):
            Spectrum([1.0, 2.0], [0.0, -1.0])
        with pytest.raises(InvalidParameterError):
            Spectrum([1.0, 2.0], [0.0])
        Spectrum([1.0, 2.0], [0.0, -1.0], spectra.NORMALIZED_UNIT)

    def test_normalized_peak_is_one(self):
        s = Spectrum([1.0, 2.0, 3.0], [1.0, 4.0, 2.0]).normalized()
        assert s.value.max() == 1.0 and s.unit == spectra.NORMALIZED_UNIT

    def test_trace_and_source(self):
        with pytest.raises(InvalidParameterError):
            TransmissionTrace([2.0, 1.0], [0, 0])
        with pytest.raises(InvalidParameterError):
            SourceImpedance(0.0)


class TestDipSpectrum:
    def test_no_particles_tracks_re_z(self):
        params = circuit.CircuitParams()
        f = np.linspace(205e6, 215e6, 101)
        s = spectra.dip_spectrum(circuit.impedance_func(params, "off"), GEOM, None, 210e6, 6.0, f)
        expected = 4 * K_B * 6.0 * circuit.impedance(params, "off", f).real
        np.testing.assert_allclose(s.value, expected, rtol=1e-14)

    def test_johnson(self):
        s = spectra.johnson_psd(83e3, 6.0, [1e8, 2e8])
        np.testing.assert_allclose(s.value, 4 * K_B * 6.0 * 83e3, rtol=1e-15)
        with pytest.raises(DomainError):
            spectra.johnson_psd(83e3, 0.0, [1e8])

    def test_grid_must_bracket(self):
        with pytest.raises(DomainError):
            spectra.dip_spectrum(83e3, GEOM, particle.ParticleEnsemble(1), F_Z, 4.2, [1e8, 1.5e8])
        with pytest.raises(DomainError):
            spectra.dip_spectrum(83e3, GEOM, None, F_Z, 0.0, [1e8, 3e8])

    def test_minimum_at_f_z_and_positive(self):
        s, _ = _dip(83e3, 10, 83e3, points=16000)
        i = int(np.argmin(s.value))
        assert abs(s.freq[i] - F_Z) <= s.freq[1] - s.freq[0]
        assert np.all(s.value >= 0)
        assert s.value.min() >= 0

    @pytest.mark.parametrize("n", [1, 10, 100, 1500])
    @pytest.mark.parametrize("r", [7.6e3, 19e3, 36e3, 83e3])
    def test_dip_law(self, n, r):
        s, width = _dip(r, n, r)
        assert spectra.dip_fwhm(s) == pytest.approx(width, rel=0.02)

    def test_width_ratio_follows_resistance(self):
        widths = [_dip(r, 1500, r)[1] for r in (36e3, 19e3, 7.6e3)]
        measured = [spectra.dip_fwhm(_dip(r, 1500, r)[0]) for r in (36e3, 19e3, 7.6e3)]
        for w_exp, w_meas in zip(widths, measured):
            assert w_meas == pytest.approx(w_exp, rel=0.02)
        assert measured[1] / measured[0] == pytest.approx(19 / 36, rel=0.05)
        assert measured[2] / measured[0] == pytest.approx(7.6 / 36, rel=0.05)

    def test_doubling_n_doubles_width(self):
        a = spectra.dip_fwhm(_dip(83e3, 750, 83e3)[0])
        b = spectra.dip_fwhm(_dip(83e3, 1500, 83e3)[0])
        assert b / a == pytest.approx(2.0, rel=0.02)

    def test_full_tank_single_electron(self):
        params = circuit.CircuitParams()
        f0 = circuit.operating_frequency(params)
        z = circuit.impedance_func(params, "off")
        r = z(f0).real
        width = _gamma(r) / TWO_PI
        f = f0 + np.linspace(-8, 8, 16001) * width
        s = spectra.dip_spectrum(z, GEOM, particle.ParticleEnsemble(1), f0, 4.2, f)
        assert spectra.dip_fwhm(s) == pytest.approx(width, rel=0.02)

    @given(st.floats(1e3, 1e6))
    def test_peak_level_linear_in_r(self, r):
        s = spectra.dip_spectrum(r, GEOM, None, F_Z, 4.2, [F_Z - 1, F_Z + 1])
        assert s.value.max() == pytest.approx(4 * K_B * 4.2 * r, rel=1e-14)


class TestDipFwhm:
    def test_constructed_lorentzian_dip(self):
        f = np.linspace(-50, 50, 1001)
        w = 7.3
        value = 1 - 0.8 / (1 + (2 * f / w) ** 2)
        got = spectra.dip_fwhm(Spectrum(f + 1e3, value, spectra.NORMALIZED_UNIT))
        assert got == pytest.approx(w, abs=f[1] - f[0])

    def test_with_baseline(self):
        f = np.linspace(-50, 50, 1001)
        base = 2 + 0.01 * f
        value = base * (1 - 1 / (1 + (2 * f / 10) ** 2))
        got = spectra.dip_fwhm(Spectrum(f + 1e3, value, spectra.PSD_UNIT, base))
        assert got == pytest.approx(10, abs=0.1)

    def test_no_dip(self):
        f = np.linspace(1, 10, 10)
        with pytest.raises(AnalysisError):
            spectra.dip_fwhm(Spectrum(f, np.ones(10)))
        with pytest.raises(AnalysisError):
            spectra.dip_fwhm(Spectrum(f, f))


class TestShuntThrough:
    def test_examples(self):
        f = [1e8, 2e8]
        assert np.all(spectra.shunt_through_s21(0.0, Z0P, f).s21 == 0)
        with pytest.warns(UserWarning):
            t = spectra.shunt_through_s21(12.5e6, Z0P, f)
        assert not t.weak_coupling
        np.testing.assert_allclose(t.s21, 1 / 3, rtol=1e-15)
        with warnings.catch_warnings():
            warnings.simplefilter("error")
            t = spectra.shunt_through_s21(83e3, Z0P, f)
        assert t.weak_coupling
        assert t.s21[0].real == pytest.approx(6.55e-3, rel=1e-3)
        assert t.s21[0].imag == 0

    def test_requires_grid(self):
        with pytest.raises(InvalidParameterError):
            spectra.shunt_through_s21(83e3, Z0P)

    def test_inverse_examples(self):
        back = spectra.impedance_from_s21(TransmissionTrace([1.0, 2.0], [0.0, 6.55e-3]), Z0P)
        assert back.z[0] == 0
        assert back.z[1].real == pytest.approx(83e3, rel=1e-3)

    def test_singular(self):
        with pytest.raises(SingularityError, match="2.0 Hz"):
            spectra.impedance_from_s21(TransmissionTrace([1.0, 2.0], [0.1, 0.5]), Z0P)

    @given(
        st.floats(-1e6, 1e6), st.floats(-1e6, 1e6), st.floats(1e3, 1e8)
    )
    def test_round_trip(self, re, im, z0):
        z = complex(re, im)
        src = SourceImpedance(z0)
        if abs(z) < 1e-3 or abs(src.z0_prime + 2 * z) < 1e-6 * z0:
            return
        with warnings.catch_warnings():
            warnings.simplefilter("ignore")
            t = spectra.shunt_through_s21(z, src, [1e8])
        back = spectra.impedance_from_s21(t, src).z[0]
        assert abs(back - z) <= 1e-9 * abs(z)

    def test_round_trip_on_tank(self):
        params = circuit.CircuitParams()
        f = np.linspace(150e6, 270e6, 2001)
        trace = circuit.ImpedanceTrace(f, circuit.impedance(params, "off", f))
        back = spectra.impedance_from_s21(spectra.shunt_through_s21(trace, Z0P), Z0P)
        np.testing.assert_allclose(back.z, trace.z, rtol=1e-9)


class TestDivider:
    def test_examples(self):
        assert spectra.divider_source_impedance(0.2e-12, 100e-12).z0_prime == pytest.approx(12.5e6, rel=1e-12)
        assert spectra.divider_source_impedance(3e-12, 3e-12, 75.0).z0_prime == 75.0
        assert spectra.divider_source_impedance(1e-12, 100e-12).z0_prime == pytest.approx(500e3, rel=1e-12)

    def test_rejects_nonpositive(self):
        with pytest.raises(InvalidParameterError):
            spectra.divider_source_impedance(0.0, 1e-12)

    @given(st.floats(1e-15, 1e-9), st.floats(1e-15, 1e-9))
    def test_formula(self, cc, cs):
        got = spectra.divider_source_impedance(cc, cs).z0_prime
        assert got == pytest.approx(math.pow(cs / cc, 2) * 50.0, rel=1e-12)
