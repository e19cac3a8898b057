"""Quantum Talbot carpets, Bohmian trajectories and atom-surface Talbot-Beeby scattering."""
from .core import (HBAR, HE_MASS, BeamSpec, GratingSpec, TalbotScales, UnitSystem, build_beam,
                   helium_beam, talbot_scales)

__all__ = ["HBAR", "HE_MASS", "BeamSpec", "GratingSpec", "TalbotScales", "UnitSystem", "build_beam",
           "helium_beam", "talbot_scales"]
__version__ = "0.1.0"
