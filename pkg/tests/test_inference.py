import json

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from trapdamp import circuit, inference, lorentzian, spectra
from trapdamp.errors import FitError, InvalidParameterError
from trapdamp.inference import DesignConstraints, FitResult, SwitchMeasurement

TRUTH = circuit.HemtModel(65e3, 9.6, 1.8e-12)
PARAMS = circuit.CircuitParams(hemt=TRUTH)
GRID = np.geomspace(1e-12, 200e-12, 40)


def _rel(a, b):
    return abs(a / b - 1.0)


class TestTypes:
    def test_measurement(self):
        with pytest.raises(InvalidParameterError):
            SwitchMeasurement(0.0, 1e3, 10)
        with pytest.raises(InvalidParameterError):
            SwitchMeasurement(1e-12, -1.0, 10)
        assert SwitchMeasurement(1e-12, 1e3, 0.5).suspicious
        assert not SwitchMeasurement(1e-12, 1e3, 1.0).suspicious

    def test_fit_result_json(self):
        r = FitResult(TRUTH, 0.01, 10, True)
        out = r.to_json()
        assert set(out) == {"r_off_ohm", "r_on_ohm", "c_ds_f", "residual", "converged"}
        json.dumps(out)
        with pytest.raises(InvalidParameterError):
            FitResult(TRUTH, -1.0, 0, True)

    def test_constraints(self):
        with pytest.raises(InvalidParameterError):
            DesignConstraints(r_min=0.0)
        with pytest.raises(InvalidParameterError):
            DesignConstraints(saturation_fraction=1.5)


class TestLorentzian:
    f = np.linspace(209e6, 211e6, 201)

    def test_noiseless_spectrum(self):
        y = lorentzian.lorentzian(self.f, 210e6, 800.0, 83e3)
        res = inference.fit_lorentzian(spectra.Spectrum(self.f, y))
        assert _rel(res.f0, 210e6) < 1e-6 and _rel(res.q, 800.0) < 1e-6 and _rel(res.r_peak, 83e3) < 1e-6

    def test_noiseless_impedance(self):
        r, c = circuit.parallel_rlc_for(210e6, 800.0, 1e-7)
        z = circuit.parallel_rlc_impedance(r, 1e-7, c, self.f)
        res = inference.fit_lorentzian(circuit.ImpedanceTrace(self.f, z))
        assert _rel(res.q, 800.0) < 1e-6 and _rel(res.r_parallel, r) < 1e-6

    def test_one_percent_noise(self):
        y = lorentzian.lorentzian(self.f, 210e6, 800.0, 83e3)
        for seed in range(100):
            rng = np.random.default_rng(seed)
            res = inference.fit_lorentzian(spectra.Spectrum(self.f, y * (1 + 0.01 * rng.standard_normal(y.size))))
            assert _rel(res.f0, 210e6) < 0.02 and _rel(res.q, 800.0) < 0.02 and _rel(res.r_peak, 83e3) < 0.02

    def test_flat_trace(self):
        with pytest.raises(FitError):
            inference.fit_lorentzian(spectra.Spectrum(self.f, np.ones(self.f.size)))

    def test_wrong_type(self):
        with pytest.raises(InvalidParameterError):
            inference.fit_lorentzian([1, 2, 3])


class TestHemtFit:
    def test_recovery_with_noise(self):
        data = inference.synthetic_measurements(PARAMS, GRID, 0.01, seed=3)
        fit = inference.fit_hemt_model(data, PARAMS)
        assert fit.converged
        assert _rel(fit.hemt.r_off, TRUTH.r_off) < 0.05
        assert _rel(fit.hemt.r_on, TRUTH.r_on) < 0.05
        assert _rel(fit.hemt.c_ds, TRUTH.c_ds) < 0.05
        assert 0.005 < fit.residual < 0.02

    def test_zero_noise(self):
        data = inference.synthetic_measurements(PARAMS, GRID)
        fit = inference.fit_hemt_model(data, PARAMS)
        assert fit.residual < 1e-8

    def test_refit_is_idempotent(self):
        data = inference.synthetic_measurements(PARAMS, GRID, 0.01, seed=4)
        a = inference.fit_hemt_model(data, PARAMS)
        b = inference.fit_hemt_model(data, PARAMS, initial=a.hemt)
        for x, y in ((a.hemt.r_off, b.hemt.r_off), (a.hemt.r_on, b.hemt.r_on), (a.hemt.c_ds, b.hemt.c_ds)):
            assert _rel(y, x) < 1e-10

    def test_deterministic(self):
        data = inference.synthetic_measurements(PARAMS, GRID, 0.01, seed=4)
        assert inference.fit_hemt_model(data, PARAMS, seed=2) == inference.fit_hemt_model(data, PARAMS, seed=2)

    def test_underdetermined(self):
        data = inference.synthetic_measurements(PARAMS, GRID[:2])
        with pytest.raises(InvalidParameterError, match="underdetermined"):
            inference.fit_hemt_model(data, PARAMS)
        data = inference.synthetic_measurements(PARAMS, GRID[::14])
        with pytest.raises(InvalidParameterError, match="underdetermined"):
            inference.fit_hemt_model(data, PARAMS, free_r_loss=True)

    def test_warnings(self):
        data = inference.synthetic_measurements(PARAMS, np.linspace(10e-12, 20e-12, 5))
        with pytest.warns(UserWarning, match="decade"):
            inference.fit_hemt_model(data, PARAMS, n_restarts=0)
        data = inference.synthetic_measurements(PARAMS, GRID[::8])
        data[0] = SwitchMeasurement(data[0].c_tuning, data[0].r_off_state, 0.5)
        with pytest.warns(UserWarning, match="eta < 1"):
            inference.fit_hemt_model(data, PARAMS, n_restarts=0)

    def test_digitized_trend(self):
        ct = np.geomspace(2.1e-12, 180e-12, 9)
        x = np.log(ct / 2.1e-12) / np.log(180 / 2.1)
        eta = 38.0 * (330.0 / 38.0) ** x
        r = np.interp(x, [0, 1], [85e3, 60e3])
        data = [SwitchMeasurement(float(c), float(a), float(b)) for c, a, b in zip(ct, r, eta)]
        fit = inference.fit_hemt_model(data, circuit.CircuitParams())
        assert fit.hemt.r_on < 100.0
        assert 0.5e-12 <= fit.hemt.c_ds <= 5e-12

    def test_free_r_loss_recovers_tank_loss(self):
        data = inference.synthetic_measurements(PARAMS, GRID, 0.01, seed=5)
        fit = inference.fit_hemt_model(data, PARAMS, free_r_loss=True)
        assert _rel(fit.r_loss, PARAMS.r_loss) < 0.02
        assert "r_loss_ohm" in fit.to_json()

    @pytest.mark.xfail(
        strict=True,
        reason="with eta data held fixed, scaling R scales the on-state resistance R/eta, so r_on follows k",
    )
    def test_scale_leaves_eta_parameters_within_noise(self):
        a, b = self._scaled_pair(1.02)
        # seed-to-seed spread of r_on and c_ds at 1% noise is under 0.5%
        assert _rel(b.hemt.r_on, a.hemt.r_on) < 0.01
        assert _rel(b.hemt.c_ds, a.hemt.c_ds) < 0.01

    @pytest.mark.parametrize("k", [0.98, 1.02])
    def test_scale_moves_resistances_with_data(self, k):
        a, b = self._scaled_pair(k)
        assert b.r_loss / a.r_loss == pytest.approx(k, rel=0.005)
        assert b.hemt.r_on / a.hemt.r_on == pytest.approx(k, rel=0.005)
        assert b.residual < 1.25 * a.residual

    @staticmethod
    def _scaled_pair(k):
        data = inference.synthetic_measurements(PARAMS, GRID, 0.01, seed=5)
        scaled = [SwitchMeasurement(m.c_tuning, k * m.r_off_state, m.eta) for m in data]
        a = inference.fit_hemt_model(data, PARAMS, free_r_loss=True)
        b = inference.fit_hemt_model(scaled, PARAMS, free_r_loss=True)
        return a, b


class TestSynthetic:
    def test_noiseless_matches_model(self):
        data = inference.synthetic_measurements(PARAMS, [22e-12])
        _, r, eta = circuit.switch_characteristics(PARAMS, np.array([22e-12]))
        assert data[0].r_off_state == r[0] and data[0].eta == eta[0]

    def test_seeded(self):
        a = inference.synthetic_measurements(PARAMS, GRID, 0.01, seed=9)
        assert a == inference.synthetic_measurements(PARAMS, GRID, 0.01, seed=9)
        assert a != inference.synthetic_measurements(PARAMS, GRID, 0.01, seed=10)


SCAN_GRID = np.geomspace(1e-12, 200e-12, 60)


class TestScan:
    def test_recommendation_in_bracket(self):
        scan = inference.scan_ctuning(PARAMS, SCAN_GRID)
        assert scan.satisfiable
        assert 10e-12 <= scan.recommended <= 50e-12
        i = int(np.searchsorted(scan.c_tuning, scan.recommended))
        assert scan.r_off_state[i] >= 60e3 and scan.eta[i] >= 100

    def test_eta_nondecreasing(self):
        scan = inference.scan_ctuning(PARAMS, SCAN_GRID)
        assert np.all(scan.eta[1:] >= scan.eta[:-1] * (1 - 0.01))

    def test_unsatisfiable(self):
        scan = inference.scan_ctuning(PARAMS, SCAN_GRID, DesignConstraints(r_min=1e9))
        assert not scan.satisfiable and scan.recommended is None
        assert scan.pareto_best in scan.c_tuning

    def test_grid_handling(self):
        with pytest.raises(InvalidParameterError):
            inference.scan_ctuning(PARAMS, [])
        with pytest.raises(InvalidParameterError):
            inference.scan_ctuning(PARAMS, [-1e-12, 1e-12])
        scan = inference.scan_ctuning(PARAMS, SCAN_GRID[::-1])
        assert np.all(np.diff(scan.c_tuning) > 0)

    @settings(max_examples=25)
    @given(
        st.floats(1e3, 1e5), st.floats(1.0, 400.0), st.floats(0.1, 1.0), st.floats(0.0, 1.0)
    )
    def test_relaxing_never_raises_recommendation(self, r_min, eta_min, shrink, sat):
        tight = DesignConstraints(r_min, eta_min, sat)
        loose = DesignConstraints(r_min * shrink, eta_min * shrink, sat)
        a = inference.scan_ctuning(PARAMS, SCAN_GRID[::3], tight)
        b = inference.scan_ctuning(PARAMS, SCAN_GRID[::3], loose)
        if a.satisfiable:
            assert b.satisfiable and b.recommended <= a.recommended
