"""Acceptance criteria, one test per criterion (or per part of a criterion).

Every test records a CRITERION line that is echoed in the pytest terminal
summary.  Criteria 9b-9d fail: the measured revival distance over the
He-Cu(110) potential is not stretched by sqrt(1 + D/E_z).
"""
import math

import numpy as np
import pytest

from talbot import analysis as an
from talbot import bohm, tdse
from talbot import wavefield as wf
from talbot.core import HBAR, HE_MASS, GratingSpec, build_beam, helium_beam, talbot_scales

BEAM = helium_beam()
GRATING = GratingSpec(period=3.6)
SCALES = talbot_scales(BEAM, GRATING)
TAU = SCALES.revival_time
D = GRATING.period


def test_criterion_01_beam_derivation(record_criterion):
    lam, zt = BEAM.wavelength, SCALES.talbot_distance
    ok = abs(lam - 0.991) <= 0.001 and abs(zt - 13.08) <= 0.01
    record_criterion("1 beam derivation", ok, f"lambda = {lam:.5f} A, z_T = {zt:.4f} A")
    assert ok


def test_criterion_02_talbot_revivals(record_criterion):
    modes = wf.grating_modes(GRATING, BEAM.mass)
    assert modes.n_max >= 8
    x = np.linspace(-0.5 * D, 0.5 * D, 2001)[:-1]
    rng = np.random.default_rng(20240521)
    worst_full, worst_half = 1.0, 1.0
    for t in rng.uniform(0.0, 2.0 * TAU, 5):
        rho = lambda tt: np.abs(wf.bloch_grating(x, tt, modes)) ** 2
        worst_full = min(worst_full, an.revival_fidelity(x, rho(t), rho(t + TAU), 0.0, D).value)
        worst_half = min(worst_half,
                         an.revival_fidelity(x, rho(t), rho(t + TAU / 2), D / 2, D).value)
    ok = worst_full >= 0.999 and worst_half >= 0.999
    record_criterion("2 Talbot revivals", ok,
                     f"min F(tau_r) = {worst_full:.12f}, min F(tau_r/2, d/2) = {worst_half:.12f}")
    assert ok


def test_criterion_03_representation_cross_oracle(record_criterion):
    modes = wf.grating_modes(GRATING, BEAM.mass)
    finite = GratingSpec(period=D, n_slits=51)
    x = np.linspace(-0.5 * D, 0.5 * D, 721)
    worst = 0.0
    for t in np.linspace(0.0, TAU / 2, 21):
        a = np.abs(wf.finite_grating(x, t, BEAM, finite)) ** 2
        b = np.abs(wf.bloch_grating(x, t, modes)) ** 2
        worst = max(worst, float(np.max(np.abs(a - b))))
    ok = worst < 1e-3
    record_criterion("3 finite/Bloch cross-oracle", ok, f"max |drho| = {worst:.3e} (N = 51)")
    assert ok


def test_criterion_04_noncrossing_and_confinement(record_criterion):
    modes = wf.grating_modes(GRATING, BEAM.mass)
    field = bohm.infinite_grating_field(BEAM, GRATING, modes)
    sampler = bohm.QuantileSampler(lambda x: np.abs(wf.bloch_grating(x, 0.0, modes)) ** 2,
                                   -0.5 * D, 0.5 * D, symmetry_period=D)
    traj = bohm.run_ensemble(200, sampler, field, 3 * TAU, TAU / 50, grating=GRATING)
    ranks = traj.rank_preserved()
    cell0 = np.floor(traj.x0 / D + 0.5)
    confined = bool(np.all(np.floor(traj.x / D + 0.5) == cell0[:, None]))
    ok = ranks and confined and not traj.failed
    record_criterion("4 noncrossing + confinement", ok,
                     f"rank preserved = {ranks}, confined = {confined}, failed = {len(traj.failed)}, "
                     f"max |x| = {np.max(np.abs(traj.x)):.4f} A")
    assert ok


def test_criterion_05_single_slit_oracle(record_criterion):
    slit = GratingSpec(period=D, n_slits=1)
    field = bohm.finite_grating_field(BEAM, slit)
    sampler = bohm.QuantileSampler(lambda x: np.abs(wf.finite_grating(x, 0.0, BEAM, slit)) ** 2,
                                   -8 * slit.sigma, 8 * slit.sigma)
    traj = bohm.run_ensemble(41, sampler, field, TAU, TAU / 100, grating=slit)
    p = wf.GaussianPacketParams(slit.sigma, BEAM.mass)
    expected = traj.x0[:, None] * p.width(traj.t)[None, :] / slit.sigma
    err = float(np.max(np.abs(traj.x - expected) / np.abs(expected)))
    ok = err < 1e-5 and not traj.failed
    record_criterion("5 single-slit scaling law", ok, f"max relative error = {err:.3e}")
    assert ok


def test_criterion_06_fraunhofer_channels(record_criterion):
    n = 10
    grating = GratingSpec(period=D, n_slits=n)
    z_obs = 5000.0
    assert z_obs > an.z_max_estimate(n, grating.sigma, grating, BEAM)
    field = bohm.finite_grating_field(BEAM, grating)
    centers = grating.slit_centers()
    sampler = bohm.QuantileSampler(
        lambda x: np.abs(wf.finite_grating(x, 0.0, BEAM, grating)) ** 2,
        centers[0] - 8 * grating.sigma, centers[-1] + 8 * grating.sigma, symmetry_period=D)
    t_end = z_obs / BEAM.speed
    traj = bohm.run_ensemble(2000, sampler, field, t_end, t_end / 10, grating=grating)
    hist = an.channel_histogram(traj, z_obs, BEAM, grating)
    assert not hist.inside_talbot_region and not traj.failed

    # bins sit at l * lambda / d
    sin1 = BEAM.wavelength / D
    centers_ok = all(abs(c - l * sin1) < 1e-12 for l, c in zip(hist.orders, hist.centers))
    j = int(np.argmin(np.abs(traj.z[0] - z_obs)))
    s = traj.x[:, j] / traj.z[:, j]
    means_ok = True
    for l, c, cnt in zip(hist.orders, hist.centers, hist.counts):
        if cnt:
            m = float(np.mean(s[np.abs(s - c) <= hist.half_width]))
            means_ok &= abs(m - c) < 0.25 * hist.half_width

    pred = wf.fraunhofer_intensity(np.arcsin(hist.centers), n, BEAM, grating)
    pred_printed = wf.fraunhofer_intensity(np.arcsin(hist.centers), n, BEAM, grating, "amplitude")
    i0 = hist.orders.index(0)
    c0 = hist.counts[i0]
    lines, ok_int = [], True
    for l, cnt, p, pp in zip(hist.orders, hist.counts, pred, pred_printed):
        rel, rel_p = cnt / c0, p / pred[i0]
        expected_count = rel_p * c0
        if expected_count >= 1.0:
            good = abs(rel - rel_p) <= 0.10 * rel_p
        else:
            # below one expected trajectory: the ensemble cannot resolve the channel
            good = cnt <= 1
        ok_int &= good
        lines.append(f"l={l:+d}: {cnt} ({rel:.4g} vs {rel_p:.4g}, unsquared form {pp / pred_printed[i0]:.4g})")
    ok = centers_ok and means_ok and ok_int
    record_criterion("6 Fraunhofer channels", ok,
                     f"sin(theta_1) = {sin1:.4f}; " + "; ".join(lines)
                     + f"; outside = {hist.outside_fraction:.4f}")
    assert ok


@pytest.mark.parametrize("n_slits", [3, 10])
def test_criterion_07_zmax_band(n_slits, record_criterion):
    grating = GratingSpec(period=D, n_slits=n_slits)
    z_est = an.z_max_estimate(n_slits, grating.sigma, grating, BEAM)
    scan = an.revival_decay(BEAM, grating, n_revivals=12)
    z_fade = scan.fade_distance
    ok = z_fade is not None and 0.5 * z_est <= z_fade <= 2.0 * z_est
    ratio = z_fade / z_est if z_fade else float("nan")
    record_criterion(f"7 z_max band (N = {n_slits})", ok,
                     f"visibility < 0.5 at z = {z_fade / SCALES.revival_distance if z_fade else 'none'} x 2z_T, "
                     f"estimate {z_est / SCALES.revival_distance:.3f} x 2z_T, ratio {ratio:.3f}; "
                     f"raw fidelity there {scan.fidelity[np.argmax(scan.visibility < 0.5)]:.3f}")
    assert ok


def _moving_gaussian(x, z, t, mass, sx, sz, k):
    """Analytic free packet: spreading Gaussian in x times a boosted Gaussian in z."""
    def spread(u, s):
        st = s * (1 + 1j * HBAR * t / (2 * mass * s * s))
        return (2 * math.pi * st * st) ** -0.25 * np.exp(-u * u / (4 * st * s))
    v = HBAR * k / mass
    phase = np.exp(1j * (k * z - 0.5 * HBAR * k * k * t / mass))
    return spread(x, sx)[:, None] * (spread(z - v * t, sz) * phase)[None, :]


def test_criterion_08_tdse_correctness(record_criterion):
    mass = HE_MASS
    grid = tdse.make_grid(8, D, 16, -20.0, 20.0, 0.05, mass)
    k = -BEAM.wavenumber
    grid.psi = _moving_gaussian(grid.x, grid.z, 0.0, mass, 1.2, 2.0, k)
    dt = tdse.stable_time_step(grid)
    out = tdse.propagate(grid, None, dt, 1000)
    exact = _moving_gaussian(grid.x, grid.z, out.t, mass, 1.2, 2.0, k)
    l2 = float(np.sqrt(np.sum(np.abs(out.psi - exact) ** 2) * grid.dx * grid.dz))
    free_halving = tdse.halving_error(grid, None, dt, 1000)

    # surface potential, absorber off, packet inside the well region
    beam = BEAM
    cfg = tdse.SurfaceRunConfig(beam=beam, n_cells=1)
    sg = tdse.make_grid(1, D, 16, cfg.z_min, cfg.z_max, cfg.dz, beam.mass)
    sg = tdse.initial_surface_state(sg, cfg)
    pot = tdse.SurfacePotential()
    sdt = tdse.stable_time_step(sg)
    sg = tdse.propagate(sg, pot, sdt, 3000)
    n0 = sg.norm()
    drift = abs(tdse.propagate(sg, pot, sdt, 1000).norm() - n0)
    dt_conv, surf_halving = tdse.converged_time_step(sg, pot, 200 * sdt)

    ok = l2 < 1e-6 and drift < 1e-9 and free_halving < 1e-8 and surf_halving < 1e-8
    record_criterion("8 TDSE correctness", ok,
                     f"free L2 error = {l2:.2e}, norm drift/1000 steps = {drift:.2e}, "
                     f"halving change free = {free_halving:.2e}, surface = {surf_halving:.2e} "
                     f"at dt = stability dt / {sdt / dt_conv:.0f}")
    assert ok


def test_criterion_09a_flat_control(surface_run, record_criterion):
    rep, _ = surface_run(attraction=0.0)
    ok = not rep.failed and abs(rep.ratio - 1.0) <= 0.02
    record_criterion("9a Talbot-Beeby flat control", ok,
                     f"measured z~_T/z_T = {rep.ratio:.4f} (target 1.00 +- 0.02)")
    assert ok


def test_criterion_09b_he_cu_21mev(surface_run, record_criterion):
    rep, _ = surface_run()
    ok = not rep.failed and abs(rep.ratio - 1.14) <= 0.03
    record_criterion("9b Talbot-Beeby He-Cu(110) 21 meV", ok,
                     f"measured z~_T/z_T = {rep.ratio:.4f}, predicted {rep.predicted_ratio:.4f} "
                     f"(target 1.14 +- 0.03)")
    assert ok


def test_criterion_09c_he_cu_42mev(surface_run, record_criterion):
    rep, _ = surface_run(energy=42.0)
    target = math.sqrt(1.0 + 6.35 / 42.0)
    ok = not rep.failed and abs(rep.ratio - target) <= 0.03
    record_criterion("9c Talbot-Beeby He-Cu(110) 42 meV", ok,
                     f"measured z~_T/z_T = {rep.ratio:.4f} (target {target:.4f} +- 0.03)")
    assert ok


def test_criterion_09d_launch_sensitivity(surface_run, record_criterion):
    ratios = []
    for launch, sz in [(6.0, 3.0), (10.0, 3.0), (8.0, 2.25), (8.0, 3.75)]:
        rep, _ = surface_run(launch_height=launch, sigma_z=sz)
        ratios.append(rep.ratio)
    ok = all(abs(r - 1.14) <= 0.03 for r in ratios)
    record_criterion("9d Talbot-Beeby +-25% launch height / beam width", ok,
                     "measured ratios " + ", ".join(f"{r:.4f}" for r in ratios)
                     + " (target 1.14 +- 0.03)")
    assert ok


def test_criterion_10_classical_limit(record_criterion):
    n = 10
    grating = GratingSpec(period=D, n_slits=n)
    heavy = build_beam(500 * HE_MASS, BEAM.energy)
    scale = math.sqrt(500.0)
    x = np.linspace(-6 * D, 6 * D, 1201)
    z = np.linspace(0.0, 1.0, 101) * SCALES.revival_distance
    worst = 1.0
    for zz in z:
        a = np.abs(wf.finite_grating(x, zz / BEAM.speed, BEAM, grating)) ** 2
        b = np.abs(wf.finite_grating(x, zz * scale / heavy.speed, heavy, grating)) ** 2
        worst = min(worst, an.revival_fidelity(x, a, b).value)
    ok = worst >= 0.99
    record_criterion("10 classical-limit rescaling", ok, f"min slice fidelity = {worst:.12f}")
    assert ok


def test_criterion_11_cavity_recurrence(record_criterion):
    modes = wf.cavity_modes(GRATING, BEAM.mass)
    tau_c = BEAM.mass * D**2 / (2 * math.pi * HBAR)
    assert math.isclose(modes.recurrence_time, tau_c, rel_tol=1e-14)
    x = np.linspace(-0.5 * D, 0.5 * D, 1001)
    worst = 1.0
    for t in [0.0, 0.13 * tau_c, 0.5 * tau_c, 0.77 * tau_c]:
        a = np.abs(wf.cavity_packet(x, t, modes)) ** 2
        b = np.abs(wf.cavity_packet(x, t + tau_c, modes)) ** 2
        worst = min(worst, an.revival_fidelity(x, a, b).value)
    walls = wf.cavity_packet(np.array([-0.5 * D, 0.5 * D]), np.array([[0.0], [0.3 * tau_c]]), modes)
    ok = worst >= 0.999 and np.all(walls == 0)
    record_criterion("11 cavity recurrence", ok,
                     f"min fidelity = {worst:.12f}, max |psi(+-d/2)| = {np.max(np.abs(walls))}")
    assert ok


def test_criterion_12_continuity(record_criterion):
    cfg = tdse.SurfaceRunConfig(beam=BEAM, n_cells=1)
    grid = tdse.make_grid(1, D, 16, cfg.z_min, cfg.z_max, cfg.dz, BEAM.mass)
    grid = tdse.initial_surface_state(grid, cfg)
    pot = tdse.SurfacePotential()
    dt = tdse.stable_time_step(grid)
    absorber = tdse.absorber_profile(grid.z, cfg.absorber_fraction, cfg.absorber_strength)
    z_abs = grid.z[-1] - cfg.absorber_fraction * (grid.z[-1] - grid.z[0])
    interior = np.zeros(grid.psi.shape, bool)
    interior[:, (grid.z > grid.z[0] + 0.5) & (grid.z < z_abs - 1.0)] = True
    worst = 0.0
    state = grid
    for chunk in (0, 1500, 1500, 3000):
        if chunk:
            state = tdse.propagate(state, pot, dt, chunk, absorber=absorber)
        s1 = tdse.propagate(state, pot, dt, 1, absorber=absorber)
        s2 = tdse.propagate(s1, pot, dt, 1, absorber=absorber)
        worst = max(worst, tdse.continuity_residual(state, s1, s2, interior))
    ok = worst < 1e-2
    record_criterion("12 continuity on grid", ok, f"max relative residual = {worst:.2e}")
    assert ok
