"""Kinetic-equation solver for jumping and coalescing particles on a line."""
from ._backend import BACKEND
from .field import BoundaryRegime, DensityField, Grid
from .integrator import RunResult, SimulationUnstable, TimeConfig, run
from .kernels import B, G, Kernel, parse_kernel
from .operators import ModelConfig, rhs
from .scenarios import Scenario, get_scenario, load_scenario, registry

__version__ = "0.1.0"

__all__ = [
    "BACKEND",
    "B",
    "BoundaryRegime",
    "DensityField",
    "G",
    "Grid",
    "Kernel",
    "ModelConfig",
    "RunResult",
    "Scenario",
    "SimulationUnstable",
    "TimeConfig",
    "get_scenario",
    "load_scenario",
    "parse_kernel",
    "registry",
    "rhs",
    "run",
]
