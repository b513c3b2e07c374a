"""Gauge-invariant Wigner functions, quantum fluid moments and transverse dispersion."""

from .params import EquilibriumPressure, PhysicalSetup, RunParameters

__all__ = ["PhysicalSetup", "EquilibriumPressure", "RunParameters"]
__version__ = "0.1.0"
