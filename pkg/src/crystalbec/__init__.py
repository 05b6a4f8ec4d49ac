"""Numerics for Bose-Einstein condensation in perfect simple-cubic crystals."""

from .errors import (ConvergenceError, CrystalBECError, DegenerateBranchError, NoBifurcationError,
                     NonUnimodalError, QuadratureError, RegimeError, SeriesError)
from .kernels import InteractionKernels, LatticeSpec, ThermoPoint, build_demo_kernels

__version__ = "0.1.0"

__all__ = [
    "ConvergenceError", "CrystalBECError", "DegenerateBranchError", "NoBifurcationError",
    "NonUnimodalError", "QuadratureError", "RegimeError", "SeriesError",
    "InteractionKernels", "LatticeSpec", "ThermoPoint", "build_demo_kernels",
]
