"""Two-dimensional quantum dots: exact spectra, density functionals and point charges."""

from ._backend import BACKEND
from .model import (GAAS, DotParams, Material, ModelError, PotentialSpec, RadialDensity,
                    RadialGrid, build_grid, default_grid, from_natural, to_natural)
from .dft_solver import MinimizationResult, SolverError, Tolerances, minimize

__all__ = ["BACKEND", "GAAS", "DotParams", "Material", "ModelError", "PotentialSpec",
           "RadialDensity", "RadialGrid", "build_grid", "default_grid", "from_natural",
           "to_natural", "MinimizationResult", "SolverError", "Tolerances", "minimize"]

__version__ = "0.1.0"
