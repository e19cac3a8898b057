"""Closed-form wavefunctions for Gaussian-slit gratings.

All evaluators broadcast over ``x`` and ``t`` and return complex arrays
(amplitude per sqrt(angstrom)).
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .core import HBAR, BeamSpec, GratingSpec

DEFAULT_MODE_TOL = 1e-14
DEFAULT_MIN_MODES = 8


@dataclass(frozen=True)
class GaussianPacketParams:
    sigma: float
    mass: float

    def complex_width(self, t):
        return self.sigma * (1.0 + 1j * HBAR * np.asarray(t, dtype=float) / (2.0 * self.mass * self.sigma**2))

    def width(self, t):
        t = np.asarray(t, dtype=float)
        return self.sigma * np.sqrt(1.0 + (HBAR * t / (2.0 * self.mass * self.sigma**2)) ** 2)

    def amplitude(self, t):
        return (2.0 * np.pi * self.complex_width(t) ** 2) ** -0.25


def gaussian_packet(x, t, p: GaussianPacketParams):
    """Freely spreading Gaussian slit wave, initially real with width ``p.sigma``."""
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("gaussian_packet is defined for t >= 0")
    st = p.complex_width(t)
    return p.amplitude(t) * np.exp(-(x**2) / (4.0 * st * p.sigma))


def gaussian_packet_dx(x, t, p: GaussianPacketParams):
    x = np.asarray(x, dtype=float)
    st = p.complex_width(t)
    return -x / (2.0 * st * p.sigma) * gaussian_packet(x, t, p)


@dataclass(frozen=True)
class ModeSet:
    """Truncated discrete momentum basis.

    For ``kind == "grating"`` the modes are n = -n_max..n_max with
    p_n = 2 pi hbar n / d and ``frequencies`` holds omega_n.  For
    ``kind == "cavity"`` they are n = 0..n_max with p_n = (2n+1) pi hbar / d
    and ``frequencies`` holds E_n / hbar.
    """

    kind: str
    n: np.ndarray
    momenta: np.ndarray
    frequencies: np.ndarray
    weights: np.ndarray
    period: float
    sigma: float
    mass: float

    @property
    def n_max(self) -> int:
        return int(np.max(np.abs(self.n)))

    @property
    def energies(self):
        return HBAR * self.frequencies

    @property
    def recurrence_time(self) -> float:
        """Shortest time after which the density repeats exactly."""
        if self.kind == "grating":
            return self.mass * self.period**2 / (math.pi * HBAR)
        return self.mass * self.period**2 / (2.0 * math.pi * HBAR)


def _n_max_for(ratio: float, tol: float, min_modes: int, offset: float) -> int:
    # largest n with exp(-ratio**2 (n + offset)**2) >= tol
    n = int(math.floor(math.sqrt(-math.log(tol)) / ratio - offset))
    return max(min_modes, n)


def grating_modes(grating: GratingSpec, mass: float, tol: float = DEFAULT_MODE_TOL,
                  min_modes: int = DEFAULT_MIN_MODES) -> ModeSet:
    """Bloch modes of the periodic Gaussian-slit grating, including n = 0."""
    d, s = grating.period, grating.sigma
    n_max = _n_max_for(2.0 * math.pi * s / d, tol, min_modes, 0.0)
    n = np.arange(-n_max, n_max + 1)
    p = 2.0 * math.pi * HBAR * n / d
    return ModeSet(
        kind="grating",
        n=n,
        momenta=p,
        frequencies=p**2 / (2.0 * mass * HBAR),
        weights=np.exp(-(s**2) * p**2 / HBAR**2),
        period=d,
        sigma=s,
        mass=mass,
    )


def cavity_modes(grating: GratingSpec, mass: float, tol: float = DEFAULT_MODE_TOL,
                 min_modes: int = DEFAULT_MIN_MODES) -> ModeSet:
    """Even modes of a hard-walled box of width d centered at x = 0."""
    d, s = grating.period, grating.sigma
    # (2n + 1) pi s / d = 2 (n + 1/2) pi s / d
    n_max = _n_max_for(2.0 * math.pi * s / d, tol, min_modes, 0.5)
    n = np.arange(0, n_max + 1)
    p = (2 * n + 1) * math.pi * HBAR / d
    return ModeSet(
        kind="cavity",
        n=n,
        momenta=p,
        frequencies=p**2 / (2.0 * mass * HBAR),
        weights=np.exp(-(s**2) * p**2 / HBAR**2),
        period=d,
        sigma=s,
        mass=mass,
    )


def _bloch_terms(x, t, modes: ModeSet):
    if modes.kind != "grating":
        raise ValueError("bloch_grating needs a grating ModeSet, got kind=%r" % modes.kind)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    # omega_n * tau_r = 2 pi n**2, so reducing t keeps the phases small
    t = np.mod(t, modes.recurrence_time)
    phase = (np.multiply.outer(x, modes.momenta / HBAR)
             - np.multiply.outer(t, modes.frequencies))
    norm = 1.0 / math.sqrt(modes.period * np.sum(modes.weights**2))
    return norm * modes.weights * np.exp(1j * phase)


def bloch_grating(x, t, modes: ModeSet):
    """Infinite-grating wavefunction, normalized to one particle per unit cell."""
    return _bloch_terms(x, t, modes).sum(axis=-1)


def bloch_grating_dx(x, t, modes: ModeSet):
    terms = _bloch_terms(x, t, modes)
    return (terms * (1j * modes.momenta / HBAR)).sum(axis=-1)


def _finite_exponents(x, t, beam: BeamSpec, grating: GratingSpec):
    if grating.infinite:
        raise ValueError("finite_grating needs a finite slit count; use bloch_grating")
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    if np.any(t < 0):
        raise ValueError("finite_grating is defined for t >= 0")
    pk = GaussianPacketParams(grating.sigma, beam.mass)
    c = 1.0 / (4.0 * pk.complex_width(t) * grating.sigma)
    dx = x[..., None] - np.asarray(grating.slit_centers())
    return pk, c, dx


def finite_norm_factor(grating: GratingSpec) -> float:
    """Scale so that the N-slit wave carries one particle per slit."""
    xk = np.asarray(grating.slit_centers())
    overlap = np.exp(-np.subtract.outer(xk, xk) ** 2 / (8.0 * grating.sigma**2)).sum()
    return math.sqrt(grating.n_slits / overlap)


def finite_grating(x, t, beam: BeamSpec, grating: GratingSpec):
    """Sum of N spreading Gaussians at the slit centers.

    Normalized to a total probability of N (one per slit), which makes the
    central cell directly comparable with :func:`bloch_grating`.
    """
    pk, c, dx = _finite_exponents(x, t, beam, grating)
    amp = pk.amplitude(np.broadcast_to(np.asarray(t, dtype=float), c.shape))
    psi = np.exp(-(dx**2) * c[..., None]).sum(axis=-1)
    return finite_norm_factor(grating) * amp * psi


def finite_grating_log_dx(x, t, beam: BeamSpec, grating: GratingSpec, node_threshold=None):
    """d(ln psi)/dx of the N-slit wave, evaluated without underflow.

    With ``node_threshold`` set, points where the slit terms cancel to
    below sqrt(threshold) of the largest term come back as NaN.
    """
    _, c, dx = _finite_exponents(x, t, beam, grating)
    e = -(dx**2) * c[..., None]
    e = e - e.real.max(axis=-1, keepdims=True)
    w = np.exp(e)
    s = w.sum(axis=-1)
    if node_threshold is not None:
        node = ~(np.abs(s) ** 2 > node_threshold)
        s = np.where(node, np.nan, s)
    return -2.0 * c * (w * dx).sum(axis=-1) / s


def finite_grating_dx(x, t, beam: BeamSpec, grating: GratingSpec):
    return finite_grating(x, t, beam, grating) * finite_grating_log_dx(x, t, beam, grating)


def _cavity_terms(x, t, modes: ModeSet, derivative: bool):
    if modes.kind != "cavity":
        raise ValueError("cavity_packet needs a cavity ModeSet, got kind=%r" % modes.kind)
    x, t = np.broadcast_arrays(np.asarray(x, dtype=float), np.asarray(t, dtype=float))
    d = modes.period
    if np.any(np.abs(x) > d / 2):
        raise ValueError("cavity_packet is defined only for |x| <= d/2")
    k = 2 * modes.n + 1
    norm = math.sqrt(2.0 / (d * np.sum(modes.weights**2)))
    time_part = modes.weights * np.exp(-1j * np.multiply.outer(t, modes.frequencies))
    if not derivative:
        # cos(k pi x/d) = (-1)**n sin(k pi (1/2 - |x|/d)); exact zero at the walls
        u = 0.5 - np.abs(x) / d
        spatial = (-1.0) ** modes.n * np.sin(np.multiply.outer(u, k * math.pi))
    else:
        spatial = -(modes.momenta / HBAR) * np.sin(np.multiply.outer(x, modes.momenta / HBAR))
    return norm * (time_part * spatial).sum(axis=-1)


def cavity_packet(x, t, modes: ModeSet):
    """Gaussian packet expanded in the modes of a box of width d (|x| <= d/2)."""
    return _cavity_terms(x, t, modes, derivative=False)


def cavity_packet_dx(x, t, modes: ModeSet):
    return _cavity_terms(x, t, modes, derivative=True)


def structure_factor(sin_theta, n_slits: int, beam: BeamSpec, period: float):
    """N-beam interference term, equal to 1 at every principal maximum."""
    beta = np.asarray(0.5 * beam.wavenumber * period * np.asarray(sin_theta, dtype=float))
    den = n_slits * np.sin(beta)
    singular = np.abs(den) < 1e-12
    safe = np.where(singular, 1.0, den)
    ratio = np.where(singular, 1.0, np.sin(n_slits * beta) / safe)
    return ratio**2


def form_factor(sin_theta, beam: BeamSpec, sigma: float, convention: str = "squared"):
    """Single-slit envelope relative to theta = 0.

    ``"squared"`` is the modulus squared of the far-field amplitude
    exp(-sigma**2 kappa**2 s**2), i.e. exp(-2 sigma**2 kappa**2 s**2); this is
    what the exact N-slit density approaches.  ``"amplitude"`` keeps the
    amplitude exponent unsquared, exp(-sigma**2 kappa**2 s**2).
    """
    s = np.asarray(sin_theta, dtype=float)
    a = (sigma * beam.wavenumber * s) ** 2
    if convention == "squared":
        return np.exp(-2.0 * a)
    if convention == "amplitude":
        return np.exp(-a)
    raise ValueError(f"unknown form-factor convention {convention!r}")


def fraunhofer_intensity(theta, n_slits: int, beam: BeamSpec, grating: GratingSpec,
                         convention: str = "squared"):
    """Far-field intensity relative to theta = 0 (paraxial, x/z = sin theta)."""
    theta = np.asarray(theta, dtype=float)
    if np.any(np.abs(theta) >= np.pi / 2):
        raise ValueError("|theta| must be below pi/2")
    if n_slits is None or n_slits < 1:
        raise ValueError("fraunhofer_intensity needs a finite slit count")
    s = np.sin(theta)
    return (form_factor(s, beam, grating.sigma, convention)
            * structure_factor(s, n_slits, beam, grating.period))
