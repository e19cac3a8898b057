import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from scipy import integrate

from talbot import wavefield as wf
from talbot.core import HBAR, GratingSpec, helium_beam, talbot_scales

BEAM = helium_beam()
D = 3.6
GRATING = GratingSpec(period=D)
TAU = talbot_scales(BEAM, GRATING).revival_time
MODES = wf.grating_modes(GRATING, BEAM.mass)
CAVITY = wf.cavity_modes(GRATING, BEAM.mass)
PK = wf.GaussianPacketParams(GRATING.sigma, BEAM.mass)


class TestGaussianPacket:
    def test_peak_amplitude(self):
        assert wf.gaussian_packet(0.0, 0.0, PK) == pytest.approx((2 * math.pi * 0.45**2) ** -0.25)

    def test_width_at_spreading_time(self):
        t_s = 2 * BEAM.mass * 0.45**2 / HBAR
        assert PK.width(t_s) == pytest.approx(0.45 * math.sqrt(2), rel=1e-14)

    @pytest.mark.parametrize("t", [0.0, 0.3 * TAU, 3 * TAU])
    def test_normalized(self, t):
        val, _ = integrate.quad(lambda x: abs(wf.gaussian_packet(x, t, PK)) ** 2, -np.inf, np.inf,
                                epsabs=1e-13, epsrel=1e-13)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_solves_free_schroedinger(self):
        # i hbar psi_t = -hbar^2/2m psi_xx by finite differences
        x = np.linspace(-2, 2, 41)
        t, h, k = 0.7, 1e-5, 1e-4
        dpsi_t = (wf.gaussian_packet(x, t + h, PK) - wf.gaussian_packet(x, t - h, PK)) / (2 * h)
        psi_xx = (wf.gaussian_packet(x + k, t, PK) - 2 * wf.gaussian_packet(x, t, PK)
                  + wf.gaussian_packet(x - k, t, PK)) / k**2
        assert np.allclose(1j * HBAR * dpsi_t, -HBAR**2 / (2 * BEAM.mass) * psi_xx, atol=1e-4)

    def test_derivative(self):
        x = np.linspace(-1.5, 1.5, 31)
        h = 1e-6
        num = (wf.gaussian_packet(x + h, 1.3, PK) - wf.gaussian_packet(x - h, 1.3, PK)) / (2 * h)
        assert np.allclose(wf.gaussian_packet_dx(x, 1.3, PK), num, atol=1e-8)

    def test_negative_time_rejected(self):
        with pytest.raises(ValueError):
            wf.gaussian_packet(0.0, -1.0, PK)


class TestModes:
    def test_grating_modes_include_zero(self):
        assert 0 in MODES.n
        assert MODES.n_max >= 8
        assert np.allclose(MODES.momenta, 2 * math.pi * HBAR * MODES.n / D)
        assert np.allclose(MODES.frequencies,
                           2 * math.pi**2 * HBAR * MODES.n**2 / (BEAM.mass * D**2), rtol=1e-14)

    def test_weights_decrease_and_tail_below_tolerance(self):
        w = MODES.weights[MODES.n >= 0]
        assert np.all(np.diff(w) < 0)
        tail = math.exp(-(GRATING.sigma**2) * (2 * math.pi * (MODES.n_max + 1) / D) ** 2)
        assert tail < wf.DEFAULT_MODE_TOL

    def test_cavity_modes(self):
        assert CAVITY.n[0] == 0
        assert np.allclose(CAVITY.momenta, (2 * CAVITY.n + 1) * math.pi * HBAR / D)
        assert np.allclose(CAVITY.energies, CAVITY.momenta**2 / (2 * BEAM.mass))
        assert np.all(np.diff(CAVITY.weights) < 0)

    def test_recurrence_times(self):
        assert MODES.recurrence_time == pytest.approx(TAU, rel=1e-14)
        assert CAVITY.recurrence_time == pytest.approx(TAU / 2, rel=1e-14)


class TestBlochGrating:
    @settings(max_examples=30, deadline=None)
    @given(x=st.floats(-10, 10), t=st.floats(0, 30))
    def test_periodic_in_x(self, x, t):
        assert wf.bloch_grating(x + D, t, MODES) == pytest.approx(wf.bloch_grating(x, t, MODES),
                                                                  abs=1e-11)

    @settings(max_examples=30, deadline=None)
    @given(x=st.floats(-2, 2), t=st.floats(0, 20))
    def test_revival_symmetries(self, x, t):
        a = abs(wf.bloch_grating(x, t, MODES))
        assert abs(wf.bloch_grating(x, t + TAU, MODES)) == pytest.approx(a, abs=1e-9)
        assert abs(wf.bloch_grating(x + D / 2, t + TAU / 2, MODES)) == pytest.approx(a, abs=1e-9)

    def test_initial_state_is_periodic_gaussian_train(self):
        x = np.linspace(-D / 2, D / 2, 4001)
        ref = sum(wf.gaussian_packet(x - k * D, 0.0, PK) for k in range(-5, 6))
        ref = ref / math.sqrt(integrate.trapezoid(np.abs(ref) ** 2, x))
        psi = wf.bloch_grating(x, 0.0, MODES)
        assert np.allclose(psi, ref, atol=1e-10)

    @pytest.mark.parametrize("t", [0.0, 0.37, 2.2, 5.9])
    def test_cell_norm_conserved(self, t):
        x = np.linspace(-D / 2, D / 2, 4001)
        val = integrate.trapezoid(np.abs(wf.bloch_grating(x, t, MODES)) ** 2, x)
        assert val == pytest.approx(1.0, abs=1e-10)

    def test_truncation_convergence(self):
        big = wf.grating_modes(GRATING, BEAM.mass, min_modes=2 * MODES.n_max)
        assert big.n_max == 2 * MODES.n_max
        x = np.linspace(-D, D, 77)
        for t in (0.0, 1.1, 3.3):
            assert np.max(np.abs(wf.bloch_grating(x, t, big) - wf.bloch_grating(x, t, MODES))) < 1e-12

    def test_derivative(self):
        x = np.linspace(-1.7, 1.7, 23)
        h = 1e-6
        num = (wf.bloch_grating(x + h, 0.9, MODES) - wf.bloch_grating(x - h, 0.9, MODES)) / (2 * h)
        assert np.allclose(wf.bloch_grating_dx(x, 0.9, MODES), num, atol=1e-7)

    def test_wrong_mode_kind(self):
        with pytest.raises(ValueError):
            wf.bloch_grating(0.0, 0.0, CAVITY)


class TestFiniteGrating:
    def test_single_slit_is_gaussian(self):
        g = GratingSpec(period=D, n_slits=1)
        x = np.linspace(-3, 3, 61)
        for t in (0.0, 2.0, 9.0):
            assert np.allclose(wf.finite_grating(x, t, BEAM, g), wf.gaussian_packet(x, t, PK),
                               atol=1e-14)

    @pytest.mark.parametrize("n", [2, 3, 10])
    def test_parity(self, n):
        g = GratingSpec(period=D, n_slits=n)
        x = np.linspace(0, 20, 51)
        assert np.allclose(wf.finite_grating(x, 1.7, BEAM, g), wf.finite_grating(-x, 1.7, BEAM, g),
                           atol=1e-14)

    @pytest.mark.parametrize("n", [2, 5])
    def test_total_probability_is_slit_count(self, n):
        g = GratingSpec(period=D, n_slits=n)
        x = np.linspace(-60, 60, 24001)
        for t in (0.0, 4.0):
            val = integrate.trapezoid(np.abs(wf.finite_grating(x, t, BEAM, g)) ** 2, x)
            assert val == pytest.approx(n, rel=1e-9)

    def test_central_cell_converges_to_bloch(self):
        x = np.linspace(-D / 2, D / 2, 101)
        t = 0.4 * TAU
        errs = []
        for n in (11, 31, 51):
            g = GratingSpec(period=D, n_slits=n)
            rho = np.abs(wf.finite_grating(x, t, BEAM, g)) ** 2
            errs.append(np.max(np.abs(rho - np.abs(wf.bloch_grating(x, t, MODES)) ** 2)))
        assert errs[0] > errs[1] > errs[2]

    def test_log_derivative(self):
        g = GratingSpec(period=D, n_slits=4)
        x = np.linspace(-9, 9, 37) + 0.01
        h = 1e-6
        psi = wf.finite_grating(x, 3.0, BEAM, g)
        num = (wf.finite_grating(x + h, 3.0, BEAM, g) - wf.finite_grating(x - h, 3.0, BEAM, g)) / (2 * h)
        assert np.allclose(wf.finite_grating_dx(x, 3.0, BEAM, g), num, atol=1e-7)
        assert np.allclose(wf.finite_grating_log_dx(x, 3.0, BEAM, g), num / psi, rtol=1e-6)

    def test_log_derivative_far_from_grating_is_finite(self):
        g = GratingSpec(period=D, n_slits=10)
        v = wf.finite_grating_log_dx(np.array([500.0, -800.0]), 1.0, BEAM, g)
        assert np.all(np.isfinite(v))

    def test_infinite_grating_rejected(self):
        with pytest.raises(ValueError):
            wf.finite_grating(0.0, 0.0, BEAM, GRATING)


class TestCavity:
    def test_walls_vanish_exactly(self):
        t = np.linspace(0, 10, 17)[:, None]
        psi = wf.cavity_packet(np.array([-D / 2, D / 2]), t, CAVITY)
        assert np.all(psi == 0)

    def test_parity_and_recurrence(self):
        x = np.linspace(0, D / 2, 41)
        for t in (0.0, 0.8, 2.5):
            assert np.allclose(wf.cavity_packet(x, t, CAVITY), wf.cavity_packet(-x, t, CAVITY), atol=1e-14)
            a = np.abs(wf.cavity_packet(x, t, CAVITY))
            b = np.abs(wf.cavity_packet(x, t + CAVITY.recurrence_time, CAVITY))
            assert np.allclose(a, b, atol=1e-10)

    def test_normalized(self):
        x = np.linspace(-D / 2, D / 2, 4001)
        for t in (0.0, 1.9):
            assert integrate.trapezoid(np.abs(wf.cavity_packet(x, t, CAVITY)) ** 2, x) == pytest.approx(1.0, abs=1e-9)

    def test_derivative(self):
        x = np.linspace(-1.6, 1.6, 21)
        h = 1e-6
        num = (wf.cavity_packet(x + h, 0.6, CAVITY) - wf.cavity_packet(x - h, 0.6, CAVITY)) / (2 * h)
        assert np.allclose(wf.cavity_packet_dx(x, 0.6, CAVITY), num, atol=1e-7)

    def test_outside_rejected(self):
        with pytest.raises(ValueError):
            wf.cavity_packet(D, 0.0, CAVITY)


class TestFraunhofer:
    def test_forward_maximum(self):
        assert wf.structure_factor(0.0, 10, BEAM, D) == 1.0
        assert wf.fraunhofer_intensity(0.0, 10, BEAM, GratingSpec(period=D, n_slits=10)) == 1.0

    def test_first_zero(self):
        s = BEAM.wavelength / (10 * D)
        assert wf.structure_factor(s, 10, BEAM, D) < 1e-28

    def test_principal_maxima_at_orders(self):
        for l in (1, 2, 3):
            assert wf.structure_factor(l * BEAM.wavelength / D, 7, BEAM, D) == pytest.approx(1.0, abs=1e-12)

    @pytest.mark.parametrize("n", [3, 5, 10])
    def test_secondary_maxima_count(self, n):
        s1 = BEAM.wavelength / D
        s = np.linspace(0, s1, 200001)[1:-1]
        f = wf.structure_factor(s, n, BEAM, D)
        peaks = np.sum((f[1:-1] > f[:-2]) & (f[1:-1] > f[2:]))
        assert peaks == n - 2

    def test_form_factor_conventions(self):
        s = 0.2
        a = (0.45 * BEAM.wavenumber * s) ** 2
        assert wf.form_factor(s, BEAM, 0.45) == pytest.approx(math.exp(-2 * a))
        assert wf.form_factor(s, BEAM, 0.45, "amplitude") == pytest.approx(math.exp(-a))
        with pytest.raises(ValueError):
            wf.form_factor(s, BEAM, 0.45, "other")

    def test_squared_form_factor_matches_far_field_density(self):
        # exact N-slit density far beyond the Talbot region versus the squared envelope
        g = GratingSpec(period=D, n_slits=10)
        z = 20000.0
        t = z / BEAM.speed
        l_s = np.array([0.0, 1.0, 2.0]) * BEAM.wavelength / D
        # paraxial lateral positions x = z sin(theta)
        rho = np.abs(wf.finite_grating(z * l_s, t, BEAM, g)) ** 2
        pred = wf.form_factor(l_s, BEAM, g.sigma)
        assert rho[1] / rho[0] == pytest.approx(pred[1], rel=0.02)
        assert rho[2] / rho[0] == pytest.approx(pred[2], rel=0.02)
        printed = wf.form_factor(l_s, BEAM, g.sigma, "amplitude")
        # the unsquared envelope overestimates the first order by almost a factor 2
        assert rho[1] / rho[0] < 0.6 * printed[1]
