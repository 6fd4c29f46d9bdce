"""Control-pulse synthesis and spectral simulation for bilinear Schrodinger
equations on the torus and the line: split-step propagation, transport flows,
Moser density rearrangement, phase/flow synthesis, and end-to-end steering."""

__version__ = "0.1.0"

from .grid import (
    Density,
    GridSpec,
    Manifold,
    PhaseField,
    VectorField,
    WaveFunction,
    distance_mod_phase,
    inner_product,
)
from .splitstep import ControlSchedule, Model, ModelSpec, backend_name, evolve, step

__all__ = [
    "Density",
    "GridSpec",
    "Manifold",
    "PhaseField",
    "VectorField",
    "WaveFunction",
    "distance_mod_phase",
    "inner_product",
    "ControlSchedule",
    "Model",
    "ModelSpec",
    "backend_name",
    "evolve",
    "step",
    "__version__",
]
