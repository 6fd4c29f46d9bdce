"""Split-step Fourier propagator driven by piecewise-constant control schedules.

Two concrete control models: trigonometric multi-direction controls on T^d
and dipole + Gaussian controls on the (boxed) line.  One schedule segment of
duration tau with control vector u applies exp(-i*tau*(-Lap + V + sum u_j W_j))
via symmetric (Strang) splitting between the Fourier-diagonal kinetic factor
and the pointwise potential factor.

The segment loop is the hot path; a compiled kernel is used when available
(see ``backend_name()``), with a numpy fallback of identical semantics.
"""
from __future__ import annotations

import json
import os
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from . import _kernel_py
from .grid import (
    GridMismatch,
    GridSpec,
    Manifold,
    PhaseField,
    WaveFunction,
    ksq,
    meshes,
)

_backend = None
if os.environ.get("QSTEER_FORCE_PYTHON") != "1":
    try:
        from . import _kernel as _backend
    except ImportError:
        _backend = None
if _backend is None:
    _backend = _kernel_py


def backend_name() -> str:
    """Which segment evolver is active: "cython" or "python"."""
    return _backend.BACKEND_NAME


class NumericsFailure(RuntimeError):
    """The propagator produced non-finite values."""


class Model(Enum):
    TORUS_TRIG = "torus_trig"
    LINE_DIPOLE_GAUSS = "line_dipole_gauss"


def control_directions(dim: int) -> np.ndarray:
    """Direction vectors of the torus controls: the first dim-1 coordinate
    unit vectors, then (1, ..., 1)."""
    b = np.eye(dim, dtype=float)
    b[dim - 1] = np.ones(dim)
    return b


@dataclass(frozen=True, eq=False)
class ModelSpec:
    """Grid + static potential + control family."""

    grid: GridSpec
    model: Model
    potential: np.ndarray | None = None
    # lower-bound parameters for the line potential check: V >= -a|x|^2 - b
    quad_bound_a: float = 0.0
    quad_bound_b: float = 0.0

    def __post_init__(self):
        if self.model is Model.TORUS_TRIG and self.grid.manifold is not Manifold.TORUS:
            raise ValueError("TORUS_TRIG requires a torus grid")
        if self.model is Model.LINE_DIPOLE_GAUSS and self.grid.manifold is not Manifold.LINE:
            raise ValueError("LINE_DIPOLE_GAUSS requires a line grid")
        V = self.potential
        if V is None:
            V = np.zeros(self.grid.shape)
        V = np.asarray(V, dtype=np.float64)
        if V.shape != self.grid.shape:
            raise GridMismatch("potential shape does not match the grid")
        if not np.all(np.isfinite(V)):
            raise ValueError("potential must be bounded on the grid")
        if self.model is Model.LINE_DIPOLE_GAUSS:
            r2 = sum(xm**2 for xm in meshes(self.grid))
            if np.any(V < -self.quad_bound_a * r2 - self.quad_bound_b - 1e-12):
                raise ValueError("potential violates V >= -a|x|^2 - b")
        V = V.copy()
        V.setflags(write=False)
        object.__setattr__(self, "potential", V)

    @property
    def control_count(self) -> int:
        d = self.grid.dim
        return 2 * d if self.model is Model.TORUS_TRIG else d + 1


@lru_cache(maxsize=8)
def _control_basis_cached(grid: GridSpec, model: Model) -> np.ndarray:
    xs = meshes(grid)
    d = grid.dim
    if model is Model.TORUS_TRIG:
        out = np.empty((2 * d,) + grid.shape)
        for j, b in enumerate(control_directions(d)):
            phase = sum(b[i] * xs[i] for i in range(d))
            out[2 * j] = np.sin(phase)
            out[2 * j + 1] = np.cos(phase)
    else:
        out = np.empty((d + 1,) + grid.shape)
        for j in range(d):
            out[j] = xs[j]
        out[d] = np.exp(-0.5 * sum(x**2 for x in xs))
    out.setflags(write=False)
    return out


def control_basis(model: ModelSpec) -> np.ndarray:
    """The m control potentials W_j, stacked."""
    return _control_basis_cached(model.grid, model.model)


def control_potential(model: ModelSpec, u) -> np.ndarray:
    """Pointwise sum u_j W_j(x) for one control vector."""
    u = np.asarray(u, dtype=float)
    if u.shape != (model.control_count,):
        raise ValueError(
            f"control vector must have length {model.control_count}, got {u.shape}"
        )
    return np.tensordot(u, control_basis(model), axes=(0, 0))


SCHEDULE_FORMAT_VERSION = 1


@dataclass(frozen=True)
class ControlSchedule:
    """Ordered constant-control segments plus an accumulated global phase."""

    segments: tuple[tuple[float, tuple[float, ...]], ...]
    global_phase: float = 0.0
    provenance: tuple = field(default_factory=tuple, compare=False)

    def __post_init__(self):
        segs = tuple(
            (float(tau), tuple(float(x) for x in u)) for tau, u in self.segments
        )
        for tau, _ in segs:
            if tau <= 0:
                raise ValueError(f"segment durations must be positive, got {tau}")
        object.__setattr__(self, "segments", segs)
        object.__setattr__(self, "global_phase",
                           float(self.global_phase) % (2.0 * np.pi))

    @property
    def total_time(self) -> float:
        return float(sum(tau for tau, _ in self.segments))

    def shifted_phase(self, extra: float) -> "ControlSchedule":
        return ControlSchedule(self.segments, self.global_phase + extra,
                               self.provenance)

    def to_json(self) -> str:
        doc = {
            "format_version": SCHEDULE_FORMAT_VERSION,
            "segments": [{"tau": tau, "u": list(u)} for tau, u in self.segments],
            "global_phase": self.global_phase,
        }
        if self.provenance:
            doc["provenance"] = list(self.provenance)
        return json.dumps(doc, indent=1)

    @classmethod
    def from_json(cls, text: str) -> "ControlSchedule":
        doc = json.loads(text)
        if doc.get("format_version") != SCHEDULE_FORMAT_VERSION:
            raise ValueError("unsupported schedule format version")
        segs = tuple((s["tau"], tuple(s["u"])) for s in doc["segments"])
        return cls(segs, doc.get("global_phase", 0.0),
                   tuple(doc.get("provenance", ())))


def concat_schedules(parts, extra_phase: float = 0.0,
                     provenance=()) -> ControlSchedule:
    """Concatenate schedules in application order, summing global phases."""
    segs: list = []
    phase = float(extra_phase)
    for p in parts:
        segs.extend(p.segments)
        phase += p.global_phase
    return ControlSchedule(tuple(segs), phase, tuple(provenance))


DEFAULT_SUBSTEPS_PER_UNIT_TIME = 1024.0


def _run_segments(model: ModelSpec, psi: WaveFunction, taus, nsubs, ucoefs,
                  skip_kinetic=False) -> WaveFunction:
    pots = np.concatenate(
        [model.potential[np.newaxis], control_basis(model)], axis=0
    )
    out = _backend.evolve_segments(
        psi.values, ksq(model.grid), pots,
        np.asarray(taus, dtype=np.float64),
        np.asarray(nsubs, dtype=np.int64),
        np.asarray(ucoefs, dtype=np.float64).reshape(len(taus), -1),
        skip_kinetic=skip_kinetic,
    )
    if not np.all(np.isfinite(out)):
        raise NumericsFailure("propagator produced non-finite values")
    return WaveFunction(model.grid, out)


def step(model: ModelSpec, psi: WaveFunction, u, tau: float, substeps: int = 1,
         skip_kinetic: bool = False) -> WaveFunction:
    """One constant-control segment exp(-i*tau*(-Lap+V+sum u_j W_j)).

    ``skip_kinetic`` disables the kinetic factor (testing hook: the segment
    becomes the exact pointwise potential phase).
    """
    if tau <= 0:
        raise ValueError("tau must be positive")
    if substeps < 1:
        raise ValueError("substeps must be >= 1")
    u = np.asarray(u, dtype=float)
    if u.shape != (model.control_count,):
        raise ValueError(f"control vector must have length {model.control_count}")
    return _run_segments(model, psi, [tau], [substeps], [u],
                         skip_kinetic=skip_kinetic)


def substeps_for(tau: float, substeps_per_unit_time: float) -> int:
    return max(1, int(np.ceil(tau * substeps_per_unit_time)))


def evolve(model: ModelSpec, psi0: WaveFunction, schedule: ControlSchedule,
           substeps_per_unit_time: float = DEFAULT_SUBSTEPS_PER_UNIT_TIME
           ) -> WaveFunction:
    """Run the whole schedule, then apply its global phase."""
    psi0.check_normalized()
    if not schedule.segments:
        out = psi0.values
    else:
        taus = [tau for tau, _ in schedule.segments]
        nsubs = [substeps_for(tau, substeps_per_unit_time) for tau in taus]
        ucoefs = [u for _, u in schedule.segments]
        out = _run_segments(model, psi0, taus, nsubs, ucoefs).values
    if schedule.global_phase != 0.0:
        out = out * np.exp(1j * schedule.global_phase)
    return WaveFunction(model.grid, out)


def apply_phase(psi: WaveFunction, phase: PhaseField | np.ndarray) -> WaveFunction:
    """Exact multiplication by e^{i*phase}: the idealized phase operation."""
    vals = phase.values if isinstance(phase, PhaseField) else np.asarray(phase)
    return WaveFunction(psi.grid, psi.values * np.exp(1j * vals))
