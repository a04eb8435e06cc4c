"""Hard-sphere configurations with attractive Riesz interactions.

Discrete energies of sphere packings, their continuum limits (Riesz
energies and fractional perimeters on grid sets), the discrete/continuum
bridge, and minimizers of both.
"""

from ._backend import NAME as BACKEND
from .core import (
    Ball,
    Box,
    Configuration,
    DensityField,
    HardSphereViolation,
    Params,
    PixelSet,
    ScaledEmpiricalMeasure,
    mass_weight,
    packing_density,
    total_mass,
    unit_ball_volume,
    validate_configuration,
)
from .kernels import FORBIDDEN, ConfinementSpec, KernelSpec, is_forbidden

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "Ball",
    "Box",
    "Configuration",
    "ConfinementSpec",
    "DensityField",
    "FORBIDDEN",
    "HardSphereViolation",
    "KernelSpec",
    "Params",
    "PixelSet",
    "ScaledEmpiricalMeasure",
    "is_forbidden",
    "mass_weight",
    "packing_density",
    "total_mass",
    "unit_ball_volume",
    "validate_configuration",
]
