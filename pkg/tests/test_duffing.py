import math

import numpy as np
import pytest

from selftrap.duffing import (
    FREQ_SLOPE_AVERAGED,
    duffing_escape_time,
    duffing_linear_threshold,
    duffing_simulate,
    duffing_threshold_numeric,
    resonance_threshold_analytic,
    slow_flow_integrate,
    slow_flow_max_amp,
    slow_flow_threshold,
)


class TestSimulate:
    def test_unforced_from_rest_stays(self):
        tr = duffing_simulate(0.0, 1.0, 50.0, stride=100)
        assert np.max(np.abs(tr.x)) == 0.0
        assert tr.escape_time is None

    def test_unforced_energy_conservation(self):
        tr = duffing_simulate(0.0, 1.0, 1000.0, stride=100, x0=0.5, v0=0.0)
        e = tr.energy()
        assert np.max(np.abs(e - e[0])) < 1e-9

    def test_beat_envelope_in_linear_regime(self):
        # detuned weak drive: envelope max ~ F/|delta|
        famp, delta = 0.01, 0.2
        tr = duffing_simulate(famp, 1.0 + delta, 1.5 * 2 * math.pi / delta,
                              stride=10)
        assert np.max(np.abs(tr.x)) == pytest.approx(famp / delta, rel=0.2)

    def test_escapes_well_above_threshold(self):
        t = duffing_escape_time(0.2, 1.0, 200.0)
        assert t is not None and t < 20.0

    def test_escape_sign_symmetric(self):
        # x -> -x maps the drive F to -F; escape times coincide exactly
        up = duffing_escape_time(0.12, 1.0, 2000.0)
        down = duffing_escape_time(-0.12, 1.0, 2000.0)
        assert up == down


class TestLinearThreshold:
    @pytest.mark.parametrize("delta,expect",
                             [(0.0, 0.0), (0.1, 0.1), (-0.05, 0.05)])
    def test_values(self, delta, expect):
        assert duffing_linear_threshold(delta) == expect


class TestSlowFlow:
    def test_unforced_phase_drift(self):
        h = slow_flow_integrate(0.0, 0.3, 10.0, stride=100)
        assert np.max(np.abs(h.amp)) == 0.0
        assert np.allclose(h.phi, math.pi - 0.15 * h.t, atol=1e-10)

    def test_resonant_zeroth_order_amplitude(self):
        h = slow_flow_integrate(0.02, 0.0, 5.0, stride=100)
        ref = 0.02 * h.t[1:] / 2
        assert np.max(np.abs(h.amp[1:] - ref) / ref) < 1e-2

    def test_resonant_first_order_phase(self):
        famp, t_end = 0.05, 20.0
        h = slow_flow_integrate(famp, 0.0, t_end, stride=1000)
        drop_ref = famp**2 * t_end**3 / 128.0
        drop = math.pi - h.phi[-1]
        assert drop == pytest.approx(drop_ref, rel=1e-2)

    def test_strong_negative_detuning_monotone_phase(self):
        h = slow_flow_integrate(0.05, -0.25, 120.0, stride=10)
        inside = h.amp < 1.0
        assert np.all(np.diff(h.phi[inside]) > 0)

    def test_linear_variant_decouples_amplitude(self):
        h = slow_flow_integrate(0.04, 0.1, 30.0, stride=100, cubic=False)
        # without the cubic term the phase is a pure drift
        assert np.allclose(h.phi, math.pi - 0.05 * h.t, atol=1e-10)


class TestAnalyticThreshold:
    def test_value(self):
        assert resonance_threshold_analytic() == pytest.approx(
            0.0666, abs=5e-4
        )

    def test_self_convergence_under_refinement(self):
        a = resonance_threshold_analytic(n_quad=2048)
        b = resonance_threshold_analytic(n_quad=4096)
        assert abs(a - b) <= 1e-6 * abs(b)

    def test_repeated_calls_bit_identical(self):
        assert resonance_threshold_analytic() == \
            resonance_threshold_analytic()

    def test_integral_below_singular_bound(self):
        # dropping cos(theta) bounds the integral by 3*(pi/2)^(1/3)
        f_c = resonance_threshold_analytic()
        integral = (27.0 / 16.0 / f_c) ** (1.0 / 3.0)
        assert integral < 3.0 * (math.pi / 2) ** (1.0 / 3.0)
        assert integral > 2.5


class TestThresholds:
    def test_slow_flow_resonance_value(self):
        f_c = slow_flow_threshold(0.0)
        # frozen regression value; the analytic estimate sits ~6% above it
        assert f_c == pytest.approx(0.0625, abs=5e-4)

    def test_slow_flow_agreement_with_analytic_is_about_six_percent(self):
        f_sf = slow_flow_threshold(0.0)
        f_an = resonance_threshold_analytic()
        assert abs(f_sf - f_an) / f_an == pytest.approx(0.062, abs=0.01)

    def test_max_amp_monotone_in_drive(self):
        amps = [slow_flow_max_amp(f, -0.05)[0]
                for f in (0.01, 0.02, 0.04, 0.08)]
        assert all(a < b for a, b in zip(amps, amps[1:]))

    def test_averaged_variant_differs(self):
        # the textbook averaging slope doubles the phase curvature and
        # roughly doubles the resonant threshold
        f_std = slow_flow_threshold(0.0, freq_slope=FREQ_SLOPE_AVERAGED)
        assert f_std == pytest.approx(0.125, abs=2e-3)

    @pytest.mark.slow
    def test_numeric_threshold_wing(self):
        # far off resonance the linear-regime estimate |delta| applies
        f_c = duffing_threshold_numeric(1.3)
        assert f_c == pytest.approx(0.3, rel=0.4)

    @pytest.mark.slow
    def test_numeric_resonance_regression(self):
        f_c = duffing_threshold_numeric(1.0)
        assert f_c == pytest.approx(0.1137, abs=2e-3)
