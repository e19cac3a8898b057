"""Units, beam and grating parameters, and the derived Talbot scales.

Internal units: lengths in angstrom, energies in meV, masses in amu.  The
time unit follows from those three (amu * A**2 / meV = 1), about 0.322 ps,
so that E = p**2 / 2m holds without conversion factors.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from scipy import constants as _c

# conversion factors to SI, fixed at import time
ANGSTROM_SI = 1e-10
MEV_SI = 1e-3 * _c.electron_volt
AMU_SI = _c.atomic_mass
TIME_UNIT_SI = math.sqrt(AMU_SI * ANGSTROM_SI**2 / MEV_SI)
TIME_UNIT_PS = TIME_UNIT_SI * 1e12

HBAR = _c.hbar / (MEV_SI * TIME_UNIT_SI)
"""Reduced Planck constant in meV * time-unit."""

HE_MASS = 4.0026
"""Helium-4 mass in amu."""

_SI_FACTORS = {
    "length": ANGSTROM_SI,
    "energy": MEV_SI,
    "mass": AMU_SI,
    "time": TIME_UNIT_SI,
}


class UnitSystem:
    """The fixed (A, meV, amu) unit system.

    Conversion factors are module constants and cannot be changed per
    instance.
    """

    hbar = HBAR
    time_unit_ps = TIME_UNIT_PS

    @staticmethod
    def to_si(value, quantity: str):
        return value * _SI_FACTORS[quantity]

    @staticmethod
    def from_si(value, quantity: str):
        return value / _SI_FACTORS[quantity]

    @staticmethod
    def time_to_ps(t):
        return t * TIME_UNIT_PS

    @staticmethod
    def ps_to_time(t_ps):
        return t_ps / TIME_UNIT_PS


@dataclass(frozen=True)
class BeamSpec:
    """Monochromatic incident beam moving along z."""

    mass: float
    energy: float
    wavelength: float = field(init=False)
    momentum: float = field(init=False)
    speed: float = field(init=False)
    wavenumber: float = field(init=False)

    def __post_init__(self):
        if not (self.mass > 0 and math.isfinite(self.mass)):
            raise ValueError(f"mass must be positive, got {self.mass!r}")
        if not (self.energy > 0 and math.isfinite(self.energy)):
            raise ValueError(f"energy must be positive, got {self.energy!r}")
        p = math.sqrt(2.0 * self.mass * self.energy)
        object.__setattr__(self, "momentum", p)
        object.__setattr__(self, "wavelength", 2.0 * math.pi * HBAR / p)
        object.__setattr__(self, "speed", p / self.mass)
        object.__setattr__(self, "wavenumber", p / HBAR)


INFINITE = None
"""Slit count marker for an infinite (Bloch-periodic) grating."""


@dataclass(frozen=True)
class GratingSpec:
    """Grating of Gaussian slits with period ``period`` and width ``sigma``.

    ``n_slits`` is None for an infinite grating.  Finite gratings are
    centered on x = 0: slit k sits at (k - (N - 1)/2) * d, which for odd N is
    the usual k*d with k = -K..K.
    """

    period: float = 3.6
    sigma: Optional[float] = None
    n_slits: Optional[int] = INFINITE
    sigma_z: Optional[float] = None

    def __post_init__(self):
        d = self.period
        if not (d > 0 and math.isfinite(d)):
            raise ValueError(f"period must be positive, got {d!r}")
        if self.sigma is None:
            object.__setattr__(self, "sigma", d / 8.0)
        if self.sigma_z is None:
            object.__setattr__(self, "sigma_z", d)
        if not (0 < self.sigma < d / 2):
            raise ValueError(f"slit width must satisfy 0 < sigma < d/2, got {self.sigma!r}")
        if self.n_slits is not None:
            if int(self.n_slits) != self.n_slits or self.n_slits < 1:
                raise ValueError(f"slit count must be a positive integer, got {self.n_slits!r}")
            object.__setattr__(self, "n_slits", int(self.n_slits))

    @property
    def infinite(self) -> bool:
        return self.n_slits is None

    def slit_centers(self):
        if self.infinite:
            raise ValueError("an infinite grating has no finite list of slit centers")
        n = self.n_slits
        return [(k - (n - 1) / 2.0) * self.period for k in range(n)]


@dataclass(frozen=True)
class TalbotScales:
    talbot_distance: float
    revival_time: float
    revival_distance: float
    spreading_time: float

    @property
    def revival_time_ps(self) -> float:
        return self.revival_time * TIME_UNIT_PS


def build_beam(mass: float, energy: float) -> BeamSpec:
    """Beam of particles of ``mass`` (amu) at kinetic energy ``energy`` (meV)."""
    return BeamSpec(mass, energy)


def helium_beam(energy: float = 21.0) -> BeamSpec:
    return BeamSpec(HE_MASS, energy)


def talbot_scales(beam: BeamSpec, grating: GratingSpec) -> TalbotScales:
    d = grating.period
    z_t = d * d / beam.wavelength
    tau_r = beam.mass * d * d / (math.pi * HBAR)
    return TalbotScales(
        talbot_distance=z_t,
        revival_time=tau_r,
        revival_distance=beam.speed * tau_r,
        spreading_time=2.0 * beam.mass * grating.sigma**2 / HBAR,
    )
