"""Two-dimensional split-operator propagation over a corrugated surface.

The x axis is periodic and spans an integer number of surface cells; the
z axis ends in an absorbing band.  Arrays are indexed ``[ix, iz]``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np
from scipy import fft as sfft

from .analysis import CarpetRaster, carpet_from_density, revival_fidelity
from .core import HBAR, BeamSpec

MIN_POINTS_PER_WAVELENGTH = 12


class InstabilityError(RuntimeError):
    pass


@dataclass(frozen=True)
class SurfacePotential:
    """Morse well plus a two-harmonic corrugation that decays as exp(-2 alpha z).

    ``attraction`` scales the attractive Morse term: 1 gives the full well
    of depth D, 0 leaves only the corrugated repulsive wall.
    """

    depth: float = 6.35
    alpha: float = 1.05
    period: float = 3.6
    c1: float = 0.03
    c2: float = 0.0004
    attraction: float = 1.0

    @property
    def well_depth(self) -> float:
        return self.attraction**2 * self.depth

    def morse(self, z):
        e = np.exp(-self.alpha * np.asarray(z, dtype=float))
        return self.depth * e * e - 2.0 * self.attraction * self.depth * e

    def coupling(self, x, z):
        x = np.asarray(x, dtype=float)
        k = 2.0 * math.pi / self.period
        return (self.depth * np.exp(-2.0 * self.alpha * np.asarray(z, dtype=float))
                * (self.c1 * np.cos(k * x) + self.c2 * np.cos(2.0 * k * x)))

    def __call__(self, x, z):
        return self.morse(z) + self.coupling(x, z)


def surface_potential(x, z, p: SurfacePotential):
    return p(x, z)


@dataclass
class WaveGrid:
    x: np.ndarray
    z: np.ndarray
    psi: np.ndarray
    mass: float
    t: float = 0.0
    absorbed: float = 0.0

    @property
    def dx(self) -> float:
        return float(self.x[1] - self.x[0])

    @property
    def dz(self) -> float:
        return float(self.z[1] - self.z[0])

    @property
    def length_x(self) -> float:
        return self.dx * self.x.size

    @property
    def density(self):
        return np.abs(self.psi) ** 2

    @property
    def phase(self):
        """S/hbar, wrapped to (-pi, pi]."""
        return np.angle(self.psi)

    def norm(self) -> float:
        return float(np.sum(self.density) * self.dx * self.dz)

    def copy(self) -> "WaveGrid":
        return replace(self, psi=self.psi.copy())


def make_grid(n_cells: int, period: float, points_per_cell: int, z_min: float, z_max: float,
              dz: float, mass: float) -> WaveGrid:
    if n_cells < 1 or points_per_cell < 2:
        raise ValueError("need at least one cell and two points per cell")
    nx = n_cells * points_per_cell
    x = (np.arange(nx) - nx // 2) * (period / points_per_cell)
    nz = int(round((z_max - z_min) / dz))
    z = z_min + dz * np.arange(nz)
    return WaveGrid(x, z, np.zeros((nx, nz), dtype=complex), mass)


def check_resolution(grid: WaveGrid, energy: float, well_depth: float = 0.0):
    """Raise if the z spacing gives fewer than 12 points per local wavelength."""
    lam = 2.0 * math.pi * HBAR / math.sqrt(2.0 * grid.mass * (energy + well_depth))
    if lam / grid.dz < MIN_POINTS_PER_WAVELENGTH:
        raise ValueError(f"dz = {grid.dz:.4g} A resolves the {lam:.4g} A wavelength with only "
                         f"{lam / grid.dz:.1f} points; need {MIN_POINTS_PER_WAVELENGTH}")


def wavenumbers(grid: WaveGrid):
    kx = 2.0 * math.pi * np.fft.fftfreq(grid.x.size, grid.dx)
    kz = 2.0 * math.pi * np.fft.fftfreq(grid.z.size, grid.dz)
    return kx, kz


def absorber_profile(z, fraction: float = 0.15, strength: float = 20.0):
    """Imaginary potential (meV) rising as sin**2 over the last ``fraction`` of z."""
    z = np.asarray(z, dtype=float)
    z_a = z[-1] - fraction * (z[-1] - z[0])
    u = np.clip((z - z_a) / (z[-1] - z_a), 0.0, 1.0)
    return strength * np.sin(0.5 * math.pi * u) ** 2


def stable_time_step(grid: WaveGrid, max_phase: float = math.pi / 4) -> float:
    """Largest dt keeping the kinetic phase per step below ``max_phase``."""
    kx, kz = wavenumbers(grid)
    e_max = HBAR**2 * (np.max(kx**2) + np.max(kz**2)) / (2.0 * grid.mass)
    return max_phase * HBAR / e_max


class SplitOperator:
    """Strang-split propagator: half potential, full kinetic, half potential.

    ``potential`` is either a callable V(x, z) or an (nx, nz) array.  With
    ``absorber`` given (array over z, in meV) an imaginary potential damps
    the wave inside the absorbing band every step.
    """

    def __init__(self, grid: WaveGrid, potential, dt: float, absorber=None, workers: int = 1):
        self.dt = dt
        self.workers = workers
        if callable(potential):
            v = potential(grid.x[:, None], grid.z[None, :])
        elif potential is None:
            v = np.zeros(grid.psi.shape)
        else:
            v = np.asarray(potential)
        v = np.asarray(v)
        self.v = np.broadcast_to(v, grid.psi.shape).astype(complex if np.iscomplexobj(v) else float)
        kx, kz = wavenumbers(grid)
        self.k2 = kx[:, None] ** 2 + kz[None, :] ** 2
        self.mass = grid.mass
        self._half_v = np.exp(-0.5j * dt * self.v / HBAR)
        if absorber is not None:
            self._half_v = self._half_v * np.exp(-0.5 * dt * np.asarray(absorber)[None, :] / HBAR)
        self._kin = np.exp(-0.5j * dt * HBAR * self.k2 / grid.mass)
        self.absorbing = absorber is not None

    def step(self, psi, n: int = 1):
        for _ in range(n):
            psi = psi * self._half_v
            psi = sfft.ifft2(sfft.fft2(psi, workers=self.workers) * self._kin, workers=self.workers)
            psi = psi * self._half_v
        return psi

    def energy(self, grid: WaveGrid) -> float:
        """<H> of the real potential (absorber excluded)."""
        phi = sfft.fft2(grid.psi, workers=self.workers)
        w = np.abs(phi) ** 2
        kin = np.sum(w * HBAR**2 * self.k2 / (2.0 * self.mass)) / np.sum(w)
        rho = grid.density
        return float(kin + np.sum(rho * self.v.real) / np.sum(rho))


def propagate(grid: WaveGrid, potential, dt: float, steps: int, absorber=None,
              drift_tol: float = 1e-6, workers: int = 1) -> WaveGrid:
    """Advance ``grid`` by ``steps * dt``.

    Without an absorber the norm must stay within ``drift_tol`` of its
    initial value, otherwise :class:`InstabilityError` is raised.
    """
    prop = SplitOperator(grid, potential, dt, absorber, workers)
    n0 = grid.norm()
    psi = prop.step(grid.psi, steps)
    out = replace(grid, psi=psi, t=grid.t + steps * dt)
    n1 = out.norm()
    if absorber is None:
        if abs(n1 - n0) > drift_tol * max(n0, 1e-300):
            raise InstabilityError(f"norm drifted from {n0:.12g} to {n1:.12g} without absorption")
    else:
        out.absorbed = grid.absorbed + max(0.0, n0 - n1)
    return out


def halving_error(grid: WaveGrid, potential, dt: float, steps: int) -> float:
    """L2 distance between ``steps`` steps of dt and ``2 steps`` of dt/2."""
    a = SplitOperator(grid, potential, dt).step(grid.psi, steps)
    b = SplitOperator(grid, potential, 0.5 * dt).step(grid.psi, 2 * steps)
    return float(np.sqrt(np.sum(np.abs(a - b) ** 2) * grid.dx * grid.dz))


def converged_time_step(grid: WaveGrid, potential, duration: float, tol: float = 1e-8,
                        dt: Optional[float] = None, max_halvings: int = 12) -> Tuple[float, float]:
    """Halve dt from the stability limit until the halving test passes.

    Returns (dt, halving error) for propagation over ``duration``.
    """
    dt = dt or stable_time_step(grid)
    for _ in range(max_halvings + 1):
        steps = max(1, int(round(duration / dt)))
        err = halving_error(grid, potential, duration / steps, steps)
        if err < tol:
            return duration / steps, err
        dt *= 0.5
    raise InstabilityError(f"halving test still at {err:.3g} after {max_halvings} halvings")


def _derivative_wavenumbers(grid: WaveGrid):
    # the Nyquist mode has no defined first derivative; drop it so real in gives real out
    kx, kz = wavenumbers(grid)
    for k in (kx, kz):
        if k.size % 2 == 0:
            k[k.size // 2] = 0.0
    return kx, kz


def gradient(grid: WaveGrid):
    """Spectral d(psi)/dx and d(psi)/dz."""
    kx, kz = _derivative_wavenumbers(grid)
    phi = sfft.fft2(grid.psi)
    return sfft.ifft2(1j * kx[:, None] * phi), sfft.ifft2(1j * kz[None, :] * phi)


def probability_current(grid: WaveGrid):
    gx, gz = gradient(grid)
    c = np.conj(grid.psi)
    f = HBAR / grid.mass
    return f * np.imag(c * gx), f * np.imag(c * gz)


@dataclass
class GridVelocityField:
    """Guidance velocity sampled on the grid, bilinear in between.

    Components are NaN where the density is below the node threshold.
    """

    x: np.ndarray
    z: np.ndarray
    vx: np.ndarray
    vz: np.ndarray
    period_x: float
    t: float = 0.0

    def __call__(self, x, z):
        return _bilinear(self, self.vx, x, z), _bilinear(self, self.vz, x, z)


def _bilinear(f: GridVelocityField, values, x, z):
    x = np.asarray(x, dtype=float)
    z = np.asarray(z, dtype=float)
    dx = f.x[1] - f.x[0]
    dz = f.z[1] - f.z[0]
    nx, nz = values.shape
    u = np.mod(x - f.x[0], f.period_x) / dx
    i0 = np.floor(u).astype(int) % nx
    i1 = (i0 + 1) % nx
    fu = u - np.floor(u)
    w = np.clip((z - f.z[0]) / dz, 0.0, nz - 1 - 1e-9)
    j0 = np.floor(w).astype(int)
    j1 = np.minimum(j0 + 1, nz - 1)
    fw = w - j0
    return ((1 - fu) * (1 - fw) * values[i0, j0] + fu * (1 - fw) * values[i1, j0]
            + (1 - fu) * fw * values[i0, j1] + fu * fw * values[i1, j1])


def grid_velocity_field(grid: WaveGrid, node_threshold: float = 1e-12) -> GridVelocityField:
    jx, jz = probability_current(grid)
    rho = grid.density
    mean = np.mean(rho)
    node = ~(rho > node_threshold * mean)
    safe = np.where(node, 1.0, rho)
    vx = np.where(node, np.nan, jx / safe)
    vz = np.where(node, np.nan, jz / safe)
    return GridVelocityField(grid.x, grid.z, vx, vz, grid.length_x, grid.t)


def continuity_residual(before: WaveGrid, middle: WaveGrid, after: WaveGrid, interior=None) -> float:
    """Relative residual of d(rho)/dt + div(rho v) on interior points.

    d(rho)/dt is the centered difference of ``before`` and ``after``; the
    divergence is taken spectrally from ``middle``.
    """
    dt = after.t - before.t
    drho = (after.density - before.density) / dt
    jx, jz = probability_current(middle)
    kx, kz = _derivative_wavenumbers(middle)
    div = np.real(sfft.ifft2(1j * kx[:, None] * sfft.fft2(jx) + 1j * kz[None, :] * sfft.fft2(jz)))
    res = drho + div
    mask = np.ones(drho.shape, bool) if interior is None else interior
    return float(np.linalg.norm(res[mask]) / np.linalg.norm(drho[mask]))


@dataclass(frozen=True)
class BeebyReport:
    reference_distance: float
    predicted_ratio: float
    measured_distance: Optional[float] = None
    peak_fidelity: Optional[float] = None
    failed: bool = False

    @property
    def predicted_distance(self) -> float:
        return self.reference_distance * self.predicted_ratio

    @property
    def ratio(self) -> Optional[float]:
        if self.measured_distance is None:
            return None
        return self.measured_distance / self.reference_distance


def beeby_distance(z_t: float, depth: float, energy: float) -> BeebyReport:
    """Effective Talbot distance z_T sqrt(1 + D/E) for a well of depth D."""
    if energy <= 0:
        raise ValueError("energy must be positive")
    if depth < 0:
        raise ValueError("well depth must be non-negative")
    return BeebyReport(z_t, math.sqrt(1.0 + depth / energy))


def local_talbot_map(x, z, potential: SurfacePotential, energy: float, z_t: float):
    """Position-dependent z_T sqrt(1 - V/E) (diagnostic only)."""
    v = potential(np.asarray(x)[:, None], np.asarray(z)[None, :])
    return z_t * np.sqrt(np.clip(1.0 - v / energy, 0.0, None))


def measure_talbot_shift(carpet: CarpetRaster, z_t: float, depth: float, energy: float,
                         z_ref: float = 0.0, scan=(1.5, 2.5), min_peak: float = 0.8) -> BeebyReport:
    """Locate the full revival of the slice at ``z_ref``.

    Scans separations L in ``scan`` * z_T for the maximum fidelity between
    the rows at z_ref and z_ref + L (x treated as periodic), refines the peak
    parabolically and reports z~_T = L/2.
    """
    z = carpet.z_over_2zt * carpet.z_unit
    x = carpet.x_over_d * carpet.period
    if z[-1] < z_ref + scan[1] * z_t:
        raise ValueError("carpet must extend past z_ref + %.2f z_T" % scan[1])
    base = _row_at(carpet.values, z, z_ref)
    period = (x[-1] - x[0]) + (x[1] - x[0])
    cand = z[(z >= z_ref + scan[0] * z_t) & (z <= z_ref + scan[1] * z_t)]
    fid = np.array([
        revival_fidelity(x, base, _row_at(carpet.values, z, zc), 0.0, period).value for zc in cand
    ])
    pred = beeby_distance(z_t, depth, energy).predicted_ratio
    i = int(np.argmax(fid))
    if fid[i] < min_peak:
        return BeebyReport(z_t, pred, None, float(fid[i]), failed=True)
    zc = cand[i]
    if 0 < i < cand.size - 1:
        y0, y1, y2 = fid[i - 1], fid[i], fid[i + 1]
        den = y0 - 2 * y1 + y2
        if den < 0:
            zc = zc + 0.5 * (y0 - y2) / den * (cand[1] - cand[0])
    return BeebyReport(z_t, pred, 0.5 * (zc - z_ref), float(fid[i]))


def _row_at(values, z, zq):
    j = int(np.clip(np.searchsorted(z, zq), 1, z.size - 1))
    w = (zq - z[j - 1]) / (z[j] - z[j - 1])
    return (1 - w) * values[j - 1] + w * values[j]


# ---------------------------------------------------------------------------
# surface scattering runs


@dataclass
class SurfaceRunConfig:
    beam: BeamSpec
    potential: SurfacePotential = field(default_factory=SurfacePotential)
    n_cells: int = 10
    points_per_cell: int = 16
    z_min: float = -2.0
    z_max: float = 60.0
    dz: float = 0.05
    launch_height: float = 8.0
    sigma_z: float = 3.0
    absorber_fraction: float = 0.15
    absorber_strength: float = 20.0
    dt: Optional[float] = None
    max_time: Optional[float] = None
    remaining_norm: float = 1e-6
    fit_margin: float = 4.0
    n_trajectories: int = 0
    record_stride: int = 200
    frame_stride: int = 0
    workers: int = 1


@dataclass
class SurfaceResult:
    config: SurfaceRunConfig
    orders: np.ndarray
    amplitudes: np.ndarray  # emergent channel amplitudes R_n at z = 0
    kz: np.ndarray
    fit_residual: float
    steps: int
    final_time: float
    absorbed: float
    continuity: Optional[float] = None
    incident: float = float("nan")  # |incident amplitude| of channel 0 at the beam energy
    trajectory_times: Optional[np.ndarray] = None
    trajectory_x: Optional[np.ndarray] = None
    trajectory_z: Optional[np.ndarray] = None
    frames: List[np.ndarray] = field(default_factory=list)
    frame_times: List[float] = field(default_factory=list)

    def channel_probabilities(self) -> np.ndarray:
        """Reflected flux per open channel relative to the incident flux.

        Only the part of the launch packet outside the interaction region
        is counted as incident, so the sum falls short of one when the
        packet starts close to the surface.
        """
        k = self.config.beam.wavenumber
        return np.abs(self.amplitudes) ** 2 * self.kz / k / self.incident**2

    def emergent_wave(self, x, z):
        """Outgoing wave sum_n R_n exp(i G_n x + i k_n z) (broadcasts x, z)."""
        g = 2.0 * math.pi * self.orders / self.config.potential.period
        x = np.asarray(x, dtype=float)[..., None]
        z = np.asarray(z, dtype=float)[..., None]
        return np.sum(self.amplitudes * np.exp(1j * (g * x + self.kz * z)), axis=-1)

    def carpet(self, z_unit: float, z_range=(0.0, 3.0), dz: float = 0.02, x_cells=(-1.0, 1.0),
               nx: int = 96) -> CarpetRaster:
        """Emergent density raster; ``z_range`` is in units of ``z_unit``."""
        d = self.config.potential.period
        x = np.linspace(x_cells[0], x_cells[1], nx, endpoint=False) * d
        z0, z1 = z_range[0] * z_unit, z_range[1] * z_unit
        z = np.arange(int(round((z1 - z0) / dz)) + 1) * dz + z0
        rho = np.abs(self.emergent_wave(x[None, :], z[:, None])) ** 2
        return carpet_from_density(x, z, rho, d, z_unit, "tdse")


def initial_surface_state(grid: WaveGrid, cfg: SurfaceRunConfig) -> WaveGrid:
    """Beam uniform across the illuminated cells, Gaussian in z, moving toward the surface.

    The Gaussian tail is tapered to zero by a sin**2 ramp over z_min <= z <= 0
    (inside the repulsive wall), so the state is smooth across the periodic
    z boundary of the spectral grid.
    """
    k = cfg.beam.wavenumber
    zz = grid.z - cfg.launch_height
    phi_z = np.exp(-(zz**2) / (4.0 * cfg.sigma_z**2) - 1j * k * zz)
    if grid.z[0] < 0.0:
        u = np.clip((grid.z - grid.z[0]) / -grid.z[0], 0.0, 1.0)
        phi_z = phi_z * np.sin(0.5 * math.pi * u) ** 2
    psi = np.broadcast_to(phi_z[None, :], grid.psi.shape).astype(complex)
    g = replace(grid, psi=psi)
    g.psi /= math.sqrt(g.norm())
    return g


def incident_amplitude(grid: WaveGrid, k: float) -> float:
    """|psi_E| of the incoming channel-0 wave for a packet moving toward -z.

    For free motion the time transform of the packet is
    (m / hbar k) phi(-k) exp(-i k z), with phi the z Fourier transform of
    the x-averaged initial state.
    """
    phi = np.sum(np.mean(grid.psi, axis=0) * np.exp(1j * k * grid.z)) * grid.dz
    return float(abs(phi) * grid.mass / (HBAR * k))


def run_surface(cfg: SurfaceRunConfig, on_frame: Optional[Callable] = None) -> SurfaceResult:
    """Scatter a beam off the surface and extract the emergent channels.

    The run accumulates the energy-resolved wave psi_E = sum_t Psi(t) e^{iEt/hbar} dt.
    Above the launch region psi_E holds only reflected waves, so each x
    Fourier channel n is fitted there to R_n exp(i k_n z).
    """
    beam = cfg.beam
    grid = make_grid(cfg.n_cells, cfg.potential.period, cfg.points_per_cell, cfg.z_min,
                     cfg.z_max, cfg.dz, beam.mass)
    check_resolution(grid, beam.energy, cfg.potential.well_depth)
    dt = cfg.dt or stable_time_step(grid)
    absorber = absorber_profile(grid.z, cfg.absorber_fraction, cfg.absorber_strength)
    prop = SplitOperator(grid, cfg.potential, dt, absorber, cfg.workers)
    state = initial_surface_state(grid, cfg)
    energy = beam.energy
    max_time = cfg.max_time or 1.6 * (cfg.z_max - cfg.z_min + cfg.launch_height) / beam.speed
    acc = np.zeros_like(state.psi)
    psi = state.psi
    steps = 0
    t = 0.0
    n0 = state.norm()
    tracker = _TrajectoryTracker(grid, cfg, dt) if cfg.n_trajectories else None
    frames, frame_times = [], []
    continuity = None
    check_every = 200
    while True:
        acc += psi * (np.exp(1j * energy * t / HBAR) * dt)
        prev = psi
        psi = prop.step(psi)
        steps += 1
        t += dt
        if tracker is not None:
            tracker.advance(replace(grid, psi=prev, t=t - dt), replace(grid, psi=psi, t=t), steps)
        if cfg.frame_stride and steps % cfg.frame_stride == 0:
            g = replace(grid, psi=psi.copy(), t=t)
            if on_frame is not None:
                on_frame(g)
        if steps % check_every == 0:
            norm = float(np.sum(np.abs(psi) ** 2) * grid.dx * grid.dz)
            if norm < cfg.remaining_norm * n0 or t >= max_time:
                break
    absorbed = n0 - float(np.sum(np.abs(psi) ** 2) * grid.dx * grid.dz)
    orders, amps, kz, resid = _fit_channels(grid, acc, cfg)
    res = SurfaceResult(cfg, orders, amps, kz, resid, steps, t, absorbed, continuity,
                        incident_amplitude(state, beam.wavenumber))
    if tracker is not None:
        res.trajectory_times, res.trajectory_x, res.trajectory_z = tracker.result()
    return res


def _fit_channels(grid: WaveGrid, psi_e, cfg: SurfaceRunConfig):
    d = cfg.potential.period
    k = cfg.beam.wavenumber
    z_lo = cfg.launch_height + cfg.fit_margin * cfg.sigma_z
    z_hi = grid.z[-1] - cfg.absorber_fraction * (grid.z[-1] - grid.z[0]) - 1.0
    sel = (grid.z >= z_lo) & (grid.z <= z_hi)
    if np.count_nonzero(sel) < 8:
        raise ValueError("no room above the launch region to fit the emergent channels")
    coeffs = np.fft.fft(psi_e, axis=0) / grid.x.size
    g_unit = 2.0 * math.pi / d
    n_prop = int(math.floor(k / g_unit - 1e-12))
    orders = np.arange(-n_prop, n_prop + 1)
    kz = np.sqrt(k**2 - (orders * g_unit) ** 2)
    zs = grid.z[sel]
    amps = np.empty(orders.size, dtype=complex)
    num = den = 0.0
    for i, n in enumerate(orders):
        c = coeffs[(n * cfg.n_cells) % grid.x.size, sel]
        amps[i] = np.mean(c * np.exp(-1j * kz[i] * zs))
        num += np.sum(np.abs(c - amps[i] * np.exp(1j * kz[i] * zs)) ** 2)
        den += np.sum(np.abs(c) ** 2)
    return orders, amps, kz, float(math.sqrt(num / den))


class _TrajectoryTracker:
    """Heun steps through the grid velocity field, started on the launch line."""

    def __init__(self, grid: WaveGrid, cfg: SurfaceRunConfig, dt: float):
        n = cfg.n_trajectories
        width = cfg.n_cells * cfg.potential.period
        self.x = -0.5 * width + (np.arange(n) + 0.5) * width / n
        self.z = np.full(n, cfg.launch_height)
        self.dt = dt
        self.stride = cfg.record_stride
        self.times, self.xs, self.zs = [0.0], [self.x.copy()], [self.z.copy()]
        self._v_prev = None

    def advance(self, before: WaveGrid, after: WaveGrid, step: int):
        f0 = self._v_prev or grid_velocity_field(before)
        f1 = grid_velocity_field(after)
        vx0, vz0 = (np.nan_to_num(v) for v in f0(self.x, self.z))
        x1, z1 = self.x + self.dt * vx0, self.z + self.dt * vz0
        vx1, vz1 = (np.nan_to_num(v) for v in f1(x1, z1))
        self.x = self.x + 0.5 * self.dt * (vx0 + vx1)
        self.z = self.z + 0.5 * self.dt * (vz0 + vz1)
        self._v_prev = f1
        if step % self.stride == 0:
            self.times.append(after.t)
            self.xs.append(self.x.copy())
            self.zs.append(self.z.copy())

    def result(self):
        return np.array(self.times), np.array(self.xs).T, np.array(self.zs).T
