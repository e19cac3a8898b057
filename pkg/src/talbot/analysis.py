"""Carpet rasters, revival fidelity and diffraction-channel reductions."""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass, field
from typing import Callable, Dict, List, Optional, Tuple

import numpy as np

from .core import HBAR, BeamSpec, GratingSpec, talbot_scales


@dataclass
class CarpetRaster:
    """Density carpet with rows at fixed z.

    ``x_over_d`` and ``z_over_2zt`` are the axes (x in grating periods, z in
    units of ``z_unit``, normally the flat-grating 2 z_T).  Each row of
    ``values`` is scaled to a maximum of 1.
    """

    x_over_d: np.ndarray
    z_over_2zt: np.ndarray
    values: np.ndarray
    provenance: str
    period: float
    z_unit: float
    meta: Dict[str, str] = field(default_factory=dict)

    def header(self) -> Dict[str, str]:
        h = {
            "x_axis": "x/d",
            "z_axis": "z/(2 zT)",
            "x_min": repr(float(self.x_over_d[0])),
            "x_max": repr(float(self.x_over_d[-1])),
            "z_min": repr(float(self.z_over_2zt[0])),
            "z_max": repr(float(self.z_over_2zt[-1])),
            "nx": str(self.x_over_d.size),
            "nz": str(self.z_over_2zt.size),
            "period_angstrom": repr(float(self.period)),
            "z_unit_angstrom": repr(float(self.z_unit)),
            "provenance": self.provenance,
        }
        h.update(self.meta)
        return h


def normalize_rows(rho):
    rho = np.asarray(rho, dtype=float)
    peak = rho.max(axis=-1, keepdims=True)
    return np.where(peak > 0, rho / np.where(peak > 0, peak, 1.0), 0.0)


def carpet_from_density(x, z, rho, period: float, z_unit: float, provenance: str,
                        meta: Optional[Dict[str, str]] = None) -> CarpetRaster:
    """Wrap a density sampled on (z, x) rows into a raster."""
    return CarpetRaster(
        x_over_d=np.asarray(x, dtype=float) / period,
        z_over_2zt=np.asarray(z, dtype=float) / z_unit,
        values=normalize_rows(rho),
        provenance=provenance,
        period=period,
        z_unit=z_unit,
        meta=dict(meta or {}),
    )


def render_carpet(density: Callable, beam: BeamSpec, grating: GratingSpec,
                  x_range: Tuple[float, float], z_range: Tuple[float, float],
                  resolution: Tuple[int, int], provenance: str = "analytic",
                  z_unit: Optional[float] = None) -> CarpetRaster:
    """Sample ``density(x, t)`` on slices z = v_z t.

    ``x_range`` is in units of d and ``z_range`` in units of ``z_unit``
    (default 2 z_T of ``beam``); ``resolution`` is (nx, nz).
    """
    nx, nz = resolution
    if nx < 1 or nz < 1 or not x_range[1] > x_range[0] or not z_range[1] >= z_range[0]:
        raise ValueError("empty carpet range or resolution")
    if z_range[0] < 0:
        raise ValueError("carpet starts at the grating, z >= 0")
    d = grating.period
    unit = 2.0 * talbot_scales(beam, grating).talbot_distance if z_unit is None else z_unit
    xs = np.linspace(x_range[0], x_range[1], nx) * d
    zs = np.linspace(z_range[0], z_range[1], nz) * unit
    ts = zs / beam.speed
    rho = np.asarray(density(xs[None, :], ts[:, None]), dtype=float)
    return carpet_from_density(xs, zs, rho, d, unit, provenance)


@dataclass(frozen=True)
class FidelityScore:
    value: float
    shift: float


def revival_fidelity(x, rho_a, rho_b, shift: float = 0.0,
                     period: Optional[float] = None) -> FidelityScore:
    """Bhattacharyya overlap of rho_a(x) and rho_b(x + shift).

    Both slices are normalized to unit integral on the common grid ``x``.
    With ``period`` set, rho_b is treated as periodic when shifted;
    otherwise it is zero outside the grid.
    """
    x = np.asarray(x, dtype=float)
    a = np.clip(np.asarray(rho_a, dtype=float), 0, None)
    b = np.clip(np.asarray(rho_b, dtype=float), 0, None)
    if a.shape != x.shape or b.shape != x.shape:
        raise ValueError("slices must share the grid")
    if shift:
        if period:
            b = np.interp(x + shift, x, b, period=period)
        else:
            b = np.interp(x + shift, x, b, left=0.0, right=0.0)
    w = _weights(x)
    na, nb = np.sum(a * w), np.sum(b * w)
    if na <= 0 or nb <= 0:
        return FidelityScore(0.0, shift)
    value = float(np.sum(np.sqrt(a * b) * w) / math.sqrt(na * nb))
    return FidelityScore(min(1.0, value), shift)


def _weights(x):
    if x.size == 1:
        return np.ones(1)
    w = np.empty_like(x)
    w[1:-1] = 0.5 * (x[2:] - x[:-2])
    w[0] = 0.5 * (x[1] - x[0])
    w[-1] = 0.5 * (x[-1] - x[-2])
    return w


def featureless_fidelity(x, rho) -> float:
    """Fidelity of ``rho`` with the uniform density on the same window."""
    return revival_fidelity(x, rho, np.ones_like(np.asarray(x, dtype=float))).value


def revival_visibility(x, rho0, rho, shift: float = 0.0, period: Optional[float] = None) -> float:
    """Fidelity rescaled so that a featureless slice scores 0 and a revival 1."""
    f = revival_fidelity(x, rho0, rho, shift, period).value
    base = featureless_fidelity(x, rho0)
    return (f - base) / (1.0 - base)


def z_max_estimate(n_slits: int, sigma: float, grating: GratingSpec, beam: BeamSpec) -> float:
    """Extent of the Talbot region behind an N-slit grating (order of magnitude)."""
    if n_slits < 1:
        raise ValueError("need at least one slit")
    return beam.speed * (n_slits - 1) * grating.period * beam.mass * sigma / HBAR


@dataclass(frozen=True)
class RevivalScan:
    z: np.ndarray
    fidelity: np.ndarray
    visibility: np.ndarray
    threshold: float

    @property
    def fade_distance(self) -> Optional[float]:
        """First revival distance whose visibility falls below the threshold."""
        below = np.flatnonzero(self.visibility < self.threshold)
        return float(self.z[below[0]]) if below.size else None


def revival_decay(beam: BeamSpec, grating: GratingSpec, n_revivals: int, threshold: float = 0.5,
                  n_points: int = 4001) -> RevivalScan:
    """Fidelity of the N-slit density at z = k 2 z_T with the initial one.

    Slices are taken over the grating aperture |x| <= N d / 2.
    """
    from .wavefield import finite_grating

    n = grating.n_slits
    half = 0.5 * n * grating.period
    x = np.linspace(-half, half, n_points)
    sc = talbot_scales(beam, grating)
    rho0 = np.abs(finite_grating(x, 0.0, beam, grating)) ** 2
    ks = np.arange(1, n_revivals + 1)
    fid, vis = [], []
    for k in ks:
        rho = np.abs(finite_grating(x, k * sc.revival_time, beam, grating)) ** 2
        fid.append(revival_fidelity(x, rho0, rho).value)
        vis.append(revival_visibility(x, rho0, rho))
    return RevivalScan(ks * sc.revival_distance, np.array(fid), np.array(vis), threshold)


@dataclass(frozen=True)
class DiffractionOrder:
    order: int
    sin_theta: float
    theta: float


def diffraction_orders(beam: BeamSpec, grating: GratingSpec) -> List[DiffractionOrder]:
    """All propagating orders, |l| lambda/d <= 1."""
    ratio = beam.wavelength / grating.period
    l_max = int(math.floor(1.0 / ratio + 1e-12))
    out = []
    for l in range(-l_max, l_max + 1):
        s = max(-1.0, min(1.0, l * ratio))
        out.append(DiffractionOrder(l, s, math.asin(s)))
    return out


@dataclass
class ChannelHistogram:
    orders: List[int]
    centers: np.ndarray
    half_width: float
    counts: np.ndarray
    outside: int
    total: int
    z_obs: float
    inside_talbot_region: bool = False

    @property
    def fractions(self) -> np.ndarray:
        return self.counts / self.total

    @property
    def outside_fraction(self) -> float:
        return self.outside / self.total

    def relative(self) -> Dict[int, float]:
        """Channel intensities relative to the zeroth order."""
        i0 = self.counts[self.orders.index(0)]
        return {l: (c / i0 if i0 else math.nan) for l, c in zip(self.orders, self.counts)}


def channel_histogram(traj, z_obs: float, beam: BeamSpec, grating: GratingSpec,
                      n_slits: Optional[int] = None, half_width: Optional[float] = None
                      ) -> ChannelHistogram:
    """Fraction of trajectories whose x/z_obs falls in each order's bin.

    Bins sit at l lambda/d with half-width lambda/(2 N d); trajectories in
    none of them are counted in ``outside`` so that all bins sum to one.
    """
    n = n_slits or grating.n_slits
    if n is None:
        raise ValueError("channel bins need a finite slit count")
    hw = beam.wavelength / (2.0 * n * grating.period) if half_width is None else half_width
    ok = np.array([i for i in range(len(traj)) if i not in set(traj.failed)], dtype=int)
    # z is the same for every member at a given record
    j = int(np.argmin(np.abs(traj.z[ok[0]] - z_obs)))
    s = traj.x[ok, j] / traj.z[ok, j]
    orders = [o.order for o in diffraction_orders(beam, grating)]
    centers = np.array([l * beam.wavelength / grating.period for l in orders])
    counts = np.array([int(np.sum(np.abs(s - c) <= hw)) for c in centers])
    inside = bool(traj.z[ok[0], j] < z_max_estimate(n, grating.sigma, grating, beam))
    if inside:
        warnings.warn("z_obs lies inside the Talbot region; channels are not yet separated")
    return ChannelHistogram(orders, centers, hw, counts, int(ok.size - counts.sum()), int(ok.size),
                            float(traj.z[ok[0], j]), inside)
