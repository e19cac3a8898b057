"""Bohmian velocity fields, trajectory integration and ensembles."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, List, Optional

import numpy as np

from . import wavefield as wf
from .core import HBAR, BeamSpec, GratingSpec, talbot_scales

NODE_THRESHOLD = 1e-12
DEFAULT_RTOL = 1e-8
DEFAULT_ATOL = 1e-10  # times the field's length scale
MIN_STEP = 1e-6  # times the field's time scale
SYMMETRY_OFFSET = 1e-9  # times d


class IntegrationError(RuntimeError):
    """Step size collapsed below the floor, usually next to a node.

    ``t`` and ``x`` hold the last accepted state; ``failed`` the indices of
    the members that could not be advanced; ``times``/``samples`` what was
    recorded before the failure.
    """

    def __init__(self, message, t, x, failed, times, samples):
        super().__init__(message)
        self.t = t
        self.x = x
        self.failed = failed
        self.times = times
        self.samples = samples


@dataclass(frozen=True)
class VelocityField:
    """x-velocity v(x, t) with metadata the integrator needs.

    The evaluator returns NaN where the density is below the node
    threshold; the integrator treats that as a request for a smaller step.
    """

    evaluator: Callable
    source: str
    speed: float
    length_scale: float
    time_scale: float
    parity_symmetric: bool = True
    z0: float = 0.0

    def __call__(self, x, t):
        x = np.asarray(x, dtype=float)
        v = self.evaluator(x, t)
        if self.parity_symmetric:
            # x = 0 is a symmetry line; rounding in the mode sums must not move it
            v = np.where(x == 0.0, 0.0, v)
        return v


def velocity_from_wavefunction(psi, dpsi, mass: float, density_floor: float = 0.0):
    """Guidance velocity (hbar/m) Im(psi'/psi), NaN where |psi|**2 <= floor."""
    psi = np.asarray(psi)
    dpsi = np.asarray(dpsi)
    rho = np.abs(psi) ** 2
    node = ~(rho > density_floor)
    safe = np.where(node, 1.0, psi)
    v = (HBAR / mass) * np.imag(dpsi / safe)
    return np.where(node, np.nan, v)


def velocity_infinite_grating(x, t, modes: wf.ModeSet, mass: float):
    """Double mode sum for the periodic-grating velocity field."""
    if modes.kind != "grating":
        raise ValueError("velocity_infinite_grating needs a grating ModeSet")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    t = np.mod(t, modes.recurrence_time)
    dp = np.subtract.outer(modes.momenta, modes.momenta) / HBAR
    dw = np.subtract.outer(modes.frequencies, modes.frequencies)
    ww = np.outer(modes.weights, modes.weights)
    arg = x[..., None, None] * dp - t[..., None, None] * dw
    c = ww * np.cos(arg)
    den = c.sum(axis=(-2, -1))
    num = (c * modes.momenta[:, None]).sum(axis=(-2, -1))
    node = ~(den > NODE_THRESHOLD * np.sum(modes.weights**2))
    return np.where(node, np.nan, num / (mass * np.where(node, 1.0, den)))


def velocity_fraunhofer(x, z, beam: BeamSpec):
    z = np.asarray(z, dtype=float)
    if np.any(z <= 0):
        raise ValueError("the far-field velocity needs z > 0")
    return beam.speed * np.asarray(x, dtype=float) / z


def infinite_grating_field(beam: BeamSpec, grating: GratingSpec,
                           modes: Optional[wf.ModeSet] = None) -> VelocityField:
    modes = modes or wf.grating_modes(grating, beam.mass)
    return VelocityField(
        evaluator=lambda x, t: velocity_infinite_grating(x, t, modes, beam.mass),
        source="infinite-grating",
        speed=beam.speed,
        length_scale=grating.period,
        time_scale=modes.recurrence_time,
    )


def finite_grating_field(beam: BeamSpec, grating: GratingSpec) -> VelocityField:
    def evaluate(x, t):
        logd = wf.finite_grating_log_dx(x, t, beam, grating, node_threshold=NODE_THRESHOLD)
        return (HBAR / beam.mass) * np.imag(logd)

    return VelocityField(
        evaluator=evaluate,
        source="finite-grating",
        speed=beam.speed,
        length_scale=grating.period,
        time_scale=talbot_scales(beam, grating).revival_time,
    )


def cavity_field(beam: BeamSpec, grating: GratingSpec,
                 modes: Optional[wf.ModeSet] = None) -> VelocityField:
    modes = modes or wf.cavity_modes(grating, beam.mass)
    floor = NODE_THRESHOLD / grating.period

    def evaluate(x, t):
        return velocity_from_wavefunction(
            wf.cavity_packet(x, t, modes), wf.cavity_packet_dx(x, t, modes), beam.mass, floor)

    return VelocityField(
        evaluator=evaluate,
        source="cavity",
        speed=beam.speed,
        length_scale=grating.period,
        time_scale=modes.recurrence_time,
    )


def fraunhofer_field(beam: BeamSpec, grating: GratingSpec, z0: float) -> VelocityField:
    return VelocityField(
        evaluator=lambda x, t: velocity_fraunhofer(x, z0 + beam.speed * np.asarray(t), beam),
        source="fraunhofer",
        speed=beam.speed,
        length_scale=grating.period,
        time_scale=talbot_scales(beam, grating).revival_time,
        z0=z0,
    )


# Dormand-Prince 5(4) tableau
_C = np.array([0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0])
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_B5 = np.array([35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84, 0.0])
_B4 = np.array([5179 / 57600, 0.0, 7571 / 16695, 393 / 640, -92097 / 339200, 187 / 2100, 1 / 40])
_E = _B5 - _B4


def integrate(field: VelocityField, x0, t_end: float, record_dt: float,
              rtol: float = DEFAULT_RTOL, atol: Optional[float] = None,
              min_step: Optional[float] = None, t0: float = 0.0):
    """Advance all members of ``x0`` together with an adaptive DP5(4) pair.

    Returns ``(times, samples)`` with ``samples[i, j]`` the position of
    member i at ``times[j]``.  Every member meets the local tolerance on
    every accepted step.
    """
    if t_end <= t0:
        raise ValueError("t_end must exceed the start time")
    if record_dt <= 0:
        raise ValueError("record_dt must be positive")
    atol = DEFAULT_ATOL * field.length_scale if atol is None else atol
    min_step = MIN_STEP * field.time_scale if min_step is None else min_step
    y = np.array(x0, dtype=float).ravel()
    n_rec = int(math.floor((t_end - t0) / record_dt + 1e-9))
    rec_times = t0 + record_dt * np.arange(n_rec + 1)
    if rec_times[-1] < t_end - 1e-12 * max(1.0, abs(t_end)):
        rec_times = np.append(rec_times, t_end)
    samples = np.empty((y.size, rec_times.size))
    samples[:, 0] = y
    j = 1
    t = t0
    h = min(record_dt, t_end - t0) / 16.0
    k1 = field(y, t)
    if not np.all(np.isfinite(k1)):
        bad = np.flatnonzero(~np.isfinite(k1))
        raise IntegrationError("initial position on a node", t, y, bad, rec_times[:1], samples[:, :1])
    fails = 0
    while j < rec_times.size:
        target = rec_times[j]
        clipped = h >= target - t
        h_use = target - t if clipped else h
        k = [k1]
        for s in range(1, 7):
            ys = y + h_use * sum(a * kk for a, kk in zip(_A[s], k))
            k.append(field(ys, t + _C[s] * h_use))
        y_new = y + h_use * sum(b * kk for b, kk in zip(_B5[:6], k[:6]))
        err_vec = h_use * sum(e * kk for e, kk in zip(_E, k))
        finite = np.isfinite(y_new) & np.isfinite(err_vec)
        if not np.all(finite):
            h = 0.5 * h_use
            if h < min_step:
                raise IntegrationError(
                    "step collapsed next to a node", t, y, np.flatnonzero(~finite),
                    rec_times[:j], samples[:, :j])
            continue
        scale = atol + rtol * np.maximum(np.abs(y), np.abs(y_new))
        ratio = np.abs(err_vec) / scale
        err = float(ratio.max()) if ratio.size else 0.0
        if err <= 1.0:
            t = target if clipped else t + h_use
            y = y_new
            k1 = k[6]
            factor = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** -0.2))
            h_next = h_use * factor
            h = max(h, h_next) if clipped else h_next
            if clipped:
                samples[:, j] = y
                j += 1
        else:
            h = h_use * max(0.2, 0.9 * err ** -0.2)
            if h < min_step:
                raise IntegrationError(
                    "step collapsed below the minimum step", t, y,
                    np.flatnonzero(ratio > 1.0), rec_times[:j], samples[:, :j])
    return rec_times, samples


@dataclass
class Trajectory:
    t: np.ndarray
    x: np.ndarray
    z: np.ndarray
    x0: float
    z0: float
    slit_index: Optional[int] = None

    @property
    def velocity_ratio(self):
        """dx/dz along the path, from the recorded samples."""
        return np.gradient(self.x, self.z) if self.z.size > 1 else np.zeros_like(self.x)


def integrate_trajectory(x0: float, z0: float, field: VelocityField, t_end: float,
                         record_dt: float, **kwargs) -> Trajectory:
    """Single Bohmian path; z follows the uniform motion z0 + v_z t."""
    times, samples = integrate(field, [x0], t_end, record_dt, **kwargs)
    return Trajectory(t=times, x=samples[0], z=z0 + field.speed * times, x0=float(x0), z0=float(z0))


class QuantileSampler:
    """Deterministic initial positions at the (i - 1/2)/n quantiles of rho0."""

    def __init__(self, density: Callable, x_min: float, x_max: float, n_grid: int = 200001,
                 symmetry_period: Optional[float] = None):
        if not x_max > x_min:
            raise ValueError("empty sampling range")
        self.x_min, self.x_max = x_min, x_max
        self.symmetry_period = symmetry_period
        self._x = np.linspace(x_min, x_max, n_grid)
        rho = np.asarray(density(self._x), dtype=float)
        if np.any(rho < 0) or not np.any(rho > 0):
            raise ValueError("density must be non-negative and not identically zero")
        cdf = np.concatenate([[0.0], np.cumsum(0.5 * (rho[1:] + rho[:-1]) * np.diff(self._x))])
        self._cdf = cdf / cdf[-1]

    def description(self, n: int) -> str:
        return f"rho0 quantiles (i-1/2)/{n} on [{self.x_min:.6g}, {self.x_max:.6g}]"

    def sample(self, n: int) -> np.ndarray:
        if n < 1:
            raise ValueError("need at least one sample")
        q = (np.arange(n) + 0.5) / n
        # cdf is nondecreasing; flat stretches have zero density and carry no samples
        keep = np.concatenate([[True], np.diff(self._cdf) > 0])
        x = np.interp(q, self._cdf[keep], self._x[keep])
        if self.symmetry_period:
            half = 0.5 * self.symmetry_period
            j = np.round(x / half)
            on_line = np.abs(x - j * half) < SYMMETRY_OFFSET * self.symmetry_period
            x = np.where(on_line, j * half + SYMMETRY_OFFSET * self.symmetry_period, x)
        return x


@dataclass
class TrajectorySet:
    t: np.ndarray
    x: np.ndarray  # (n_traj, n_times)
    z: np.ndarray  # (n_traj, n_times)
    x0: np.ndarray
    z0: np.ndarray
    slit_index: np.ndarray
    sampling: str
    failed: List[int] = field(default_factory=list)

    def __len__(self):
        return self.x.shape[0]

    @property
    def trajectories(self) -> List[Trajectory]:
        return [
            Trajectory(self.t, self.x[i], self.z[i], float(self.x0[i]), float(self.z0[i]),
                       None if self.slit_index[i] < -10**8 else int(self.slit_index[i]))
            for i in range(len(self))
        ]

    @property
    def order(self) -> np.ndarray:
        """Initial x ranks."""
        return np.argsort(self.x0, kind="stable")

    def rank_preserved(self) -> bool:
        """True when the x-ordering at every recorded time equals the initial one."""
        ok = [i for i in self.order if i not in set(self.failed)]
        xs = self.x[ok]
        return bool(np.all(np.diff(xs, axis=0) > 0))


def slit_labels(x0, grating: GratingSpec):
    """Index of the slit (unit cell) each start position belongs to."""
    d = grating.period
    if grating.infinite or grating.n_slits % 2 == 1:
        return np.floor(np.asarray(x0) / d + 0.5).astype(int)
    return np.floor(np.asarray(x0) / d).astype(int)


def run_ensemble(n: int, sampler: QuantileSampler, field: VelocityField, t_end: float,
                 record_dt: float, grating: Optional[GratingSpec] = None, z0: float = 0.0,
                 block_size: int = 256, threads: int = 1, **kwargs) -> TrajectorySet:
    """Integrate ``n`` trajectories started at the quantiles of rho0.

    Members are integrated in fixed blocks, so the output does not depend
    on ``threads``.  Failed members are listed in ``failed`` and keep NaN
    samples after their last good record.
    """
    if n < 2:
        raise ValueError("an ensemble needs at least two members")
    x0 = sampler.sample(n)
    blocks = [np.arange(i, min(i + block_size, n)) for i in range(0, n, block_size)]

    def work(idx):
        return _integrate_block(field, x0[idx], t_end, record_dt, kwargs)

    if threads > 1 and len(blocks) > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            results = list(pool.map(work, blocks))
    else:
        results = [work(b) for b in blocks]
    times = results[0][0]
    x = np.vstack([r[1] for r in results])
    failed = [int(blocks[b][i]) for b, r in enumerate(results) for i in r[2]]
    labels = slit_labels(x0, grating) if grating is not None else np.full(n, -10**9)
    z0s = np.full(n, float(z0))
    z = z0s[:, None] + field.speed * times[None, :]
    return TrajectorySet(times, x, z, x0, z0s, labels, sampler.description(n), sorted(failed))


def _integrate_block(field, x0, t_end, record_dt, kwargs):
    alive = np.arange(x0.size)
    out = None
    failed = []
    while alive.size:
        try:
            times, samples = integrate(field, x0[alive], t_end, record_dt, **kwargs)
        except IntegrationError as exc:
            bad = alive[np.asarray(exc.failed, dtype=int)]
            if out is None:
                n_rec = _record_count(t_end, record_dt)
                out = np.full((x0.size, n_rec), np.nan)
            out[bad, : exc.samples.shape[1]] = exc.samples[np.asarray(exc.failed, dtype=int)]
            failed.extend(int(b) for b in bad)
            alive = np.setdiff1d(alive, bad)
            continue
        if out is None:
            out = np.full((x0.size, times.size), np.nan)
        out[alive] = samples
        return times, out, sorted(failed)
    times = np.linspace(0.0, t_end, out.shape[1])
    return times, out, sorted(failed)


def _record_count(t_end, record_dt):
    n_rec = int(math.floor(t_end / record_dt + 1e-9))
    extra = 1 if record_dt * n_rec < t_end - 1e-12 * max(1.0, t_end) else 0
    return n_rec + 1 + extra


@dataclass(frozen=True)
class QuantumPotentialField:
    x: np.ndarray
    values: np.ndarray  # NaN where masked

    def __call__(self, x):
        return np.interp(x, self.x, self.values)


def quantum_potential(x, rho, mass: float, threshold: float = 1e-12) -> QuantumPotentialField:
    """-(hbar**2/2m) (sqrt rho)''/sqrt rho by centered differences on a uniform grid.

    Points with rho below ``threshold * max(rho)`` and the two end points
    are masked with NaN.
    """
    x = np.asarray(x, dtype=float)
    rho = np.asarray(rho, dtype=float)
    if np.any(rho < 0):
        raise ValueError("density must be non-negative")
    dx = x[1] - x[0]
    r = np.sqrt(rho)
    q = np.full_like(r, np.nan)
    lap = (r[2:] - 2.0 * r[1:-1] + r[:-2]) / dx**2
    inner = r[1:-1]
    ok = rho[1:-1] > threshold * rho.max()
    q[1:-1] = np.where(ok, -(HBAR**2) / (2.0 * mass) * lap / np.where(ok, inner, 1.0), np.nan)
    return QuantumPotentialField(x, q)
