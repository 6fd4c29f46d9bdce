"""Uniform spectral grids on T^d and on truncated boxes standing in for R^d.

All field types are immutable value objects over a shared ``GridSpec``.
Differentiation and quadrature are spectral: FFT wavenumbers and the
uniform-node (trapezoidal) rule, which is spectrally accurate for the
periodic data these grids carry.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass
from enum import Enum
from functools import lru_cache

import numpy as np


class GridMismatch(ValueError):
    """Two fields that must share a grid do not."""


class NormalizationError(ValueError):
    """A state that must have unit L2 norm does not."""


class Manifold(Enum):
    TORUS = "torus"
    LINE = "line"


NORM_TOL = 1e-10


@dataclass(frozen=True)
class GridSpec:
    """Uniform grid: T^d with period 2*pi, or the box [-L, L)^d for the line.

    ``points_per_axis`` must be a power of two >= 8.  ``box_half_width`` is
    required for LINE and ignored for TORUS (whose period is fixed).
    """

    manifold: Manifold
    dim: int
    points_per_axis: int
    box_half_width: float | None = None

    def __post_init__(self):
        n = self.points_per_axis
        if self.dim < 1:
            raise ValueError(f"dim must be >= 1, got {self.dim}")
        if n < 8 or (n & (n - 1)) != 0:
            raise ValueError(f"points_per_axis must be a power of two >= 8, got {n}")
        if self.manifold is Manifold.LINE:
            if self.box_half_width is None or self.box_half_width <= 0:
                raise ValueError("LINE grids need a positive box_half_width")
        elif self.box_half_width is not None:
            raise ValueError("TORUS grids fix the period to 2*pi; drop box_half_width")

    @property
    def period(self) -> float:
        if self.manifold is Manifold.TORUS:
            return 2.0 * np.pi
        return 2.0 * self.box_half_width

    @property
    def spacing(self) -> float:
        return self.period / self.points_per_axis

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.points_per_axis,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    @property
    def volume(self) -> float:
        return self.period**self.dim


@lru_cache(maxsize=None)
def axis_coords(spec: GridSpec) -> np.ndarray:
    """Node coordinates along one axis: [0, 2pi) or [-L, L)."""
    n = spec.points_per_axis
    if spec.manifold is Manifold.TORUS:
        x = 2.0 * np.pi * np.arange(n) / n
    else:
        L = spec.box_half_width
        x = -L + 2.0 * L * np.arange(n) / n
    x.setflags(write=False)
    return x


@lru_cache(maxsize=None)
def meshes(spec: GridSpec) -> tuple[np.ndarray, ...]:
    """d coordinate arrays of shape ``spec.shape`` (ij indexing)."""
    out = np.meshgrid(*(axis_coords(spec),) * spec.dim, indexing="ij")
    for a in out:
        a.setflags(write=False)
    return tuple(out)


@lru_cache(maxsize=None)
def axis_wavenumbers(spec: GridSpec) -> np.ndarray:
    """FFT wavenumbers along one axis (integers on the torus)."""
    k = 2.0 * np.pi * np.fft.fftfreq(spec.points_per_axis, d=spec.spacing)
    k.setflags(write=False)
    return k


@lru_cache(maxsize=None)
def wavenumber_meshes(spec: GridSpec) -> tuple[np.ndarray, ...]:
    out = np.meshgrid(*(axis_wavenumbers(spec),) * spec.dim, indexing="ij")
    for a in out:
        a.setflags(write=False)
    return tuple(out)


@lru_cache(maxsize=None)
def ksq(spec: GridSpec) -> np.ndarray:
    """|k|^2 on the full grid: the Fourier symbol of -Laplacian."""
    out = sum(km**2 for km in wavenumber_meshes(spec))
    out.setflags(write=False)
    return out


def _frozen(values, dtype) -> np.ndarray:
    a = np.ascontiguousarray(values, dtype=dtype)
    a.setflags(write=False)
    return a


def _check_shape(spec: GridSpec, values: np.ndarray):
    if values.shape != spec.shape:
        raise GridMismatch(f"values shape {values.shape} != grid shape {spec.shape}")


def quad_norm(spec: GridSpec, values: np.ndarray) -> float:
    """Quadrature-weighted L2 norm."""
    return float(np.sqrt(np.sum(np.abs(values) ** 2) * spec.cell_volume))


@dataclass(frozen=True, eq=False)
class WaveFunction:
    """Unit-L2-norm complex field: the state of the controlled equation."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        _check_shape(self.grid, self.values)
        object.__setattr__(self, "values", _frozen(self.values, np.complex128))

    @classmethod
    def from_values(cls, grid: GridSpec, values) -> "WaveFunction":
        """Normalize ``values`` and wrap them as a state."""
        values = np.asarray(values, dtype=np.complex128)
        nrm = quad_norm(grid, values)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise NormalizationError("cannot normalize a zero or non-finite field")
        return cls(grid, values / nrm)

    def norm(self) -> float:
        return quad_norm(self.grid, self.values)

    def check_normalized(self, tol: float = NORM_TOL):
        nrm = self.norm()
        if abs(nrm - 1.0) > tol:
            raise NormalizationError(f"norm {nrm} deviates from 1 by more than {tol}")

    def normalized(self) -> "WaveFunction":
        return WaveFunction.from_values(self.grid, self.values)


@dataclass(frozen=True, eq=False)
class Density:
    """Nonnegative real field rho with unit L2 mass (integral of rho^2 is 1)."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        _check_shape(self.grid, self.values)
        vals = np.asarray(self.values, dtype=np.float64)
        if np.any(vals < 0):
            raise ValueError("density values must be nonnegative")
        if abs(quad_norm(self.grid, vals) - 1.0) > NORM_TOL:
            raise NormalizationError("density must satisfy integral(rho^2) = 1")
        object.__setattr__(self, "values", _frozen(vals, np.float64))

    @classmethod
    def from_values(cls, grid: GridSpec, values) -> "Density":
        values = np.asarray(values, dtype=np.float64)
        if np.any(values < 0):
            raise ValueError("density values must be nonnegative")
        nrm = quad_norm(grid, values)
        if not np.isfinite(nrm) or nrm == 0.0:
            raise NormalizationError("cannot normalize a zero or non-finite density")
        return cls(grid, values / nrm)


@dataclass(frozen=True, eq=False)
class PhaseField:
    """Real field, no normalization constraint."""

    grid: GridSpec
    values: np.ndarray

    def __post_init__(self):
        _check_shape(self.grid, self.values)
        vals = np.asarray(self.values, dtype=np.float64)
        if not np.all(np.isfinite(vals)):
            raise ValueError("phase field must be finite")
        object.__setattr__(self, "values", _frozen(vals, np.float64))


@dataclass(frozen=True, eq=False)
class VectorField:
    """d real component fields on a shared grid."""

    grid: GridSpec
    components: tuple[np.ndarray, ...]

    def __post_init__(self):
        if len(self.components) != self.grid.dim:
            raise ValueError(
                f"need {self.grid.dim} components, got {len(self.components)}"
            )
        comps = []
        for c in self.components:
            c = np.asarray(c, dtype=np.float64)
            _check_shape(self.grid, c)
            if not np.all(np.isfinite(c)):
                raise ValueError("vector field components must be finite")
            comps.append(_frozen(c, np.float64))
        object.__setattr__(self, "components", tuple(comps))

    def max_abs(self) -> float:
        return max(float(np.max(np.abs(c))) for c in self.components)

    def __neg__(self) -> "VectorField":
        return VectorField(self.grid, tuple(-c for c in self.components))

    def scaled(self, s: float) -> "VectorField":
        return VectorField(self.grid, tuple(s * c for c in self.components))


def zero_field(spec: GridSpec) -> VectorField:
    z = np.zeros(spec.shape)
    return VectorField(spec, (z,) * spec.dim)


def supported_in_interior(field: VectorField, fraction: float = 0.5,
                          tol: float = 1e-12) -> bool:
    """True if every component vanishes (to ``tol``) outside the inner
    ``fraction`` of the box.  Flow operations on LINE grids require this."""
    spec = field.grid
    if spec.manifold is Manifold.TORUS:
        return True
    half = fraction * spec.box_half_width
    outside = np.zeros(spec.shape, dtype=bool)
    for xm in meshes(spec):
        outside |= np.abs(xm) > half
    return all(float(np.max(np.abs(c[outside]), initial=0.0)) <= tol
               for c in field.components)


def mass_leak(psi: WaveFunction, fraction: float = 0.5) -> float:
    """Fraction of |psi|^2 outside the inner ``fraction`` of a LINE box.

    Diagnoses whether the periodic box is still a faithful surrogate for the
    whole line; meaningful for LINE grids only (returns 0 on the torus).
    """
    spec = psi.grid
    if spec.manifold is Manifold.TORUS:
        return 0.0
    half = fraction * spec.box_half_width
    outside = np.zeros(spec.shape, dtype=bool)
    for xm in meshes(spec):
        outside |= np.abs(xm) > half
    total = np.sum(np.abs(psi.values) ** 2)
    return float(np.sum(np.abs(psi.values[outside]) ** 2) / total)


# -- L2 pairing and the phase-invariant distance ------------------------------

def inner_product(a: WaveFunction, b: WaveFunction) -> complex:
    """Quadrature L2 pairing <a, b>: conjugate-linear in a, linear in b."""
    if a.grid != b.grid:
        raise GridMismatch("inner_product requires a common grid")
    return complex(np.vdot(a.values, b.values) * a.grid.cell_volume)


def distance_mod_phase(a: WaveFunction, b: WaveFunction) -> float:
    """inf over theta of ||a - e^{i theta} b||: sqrt(2 - 2|<a,b>|)."""
    if a.grid != b.grid:
        raise GridMismatch("distance_mod_phase requires a common grid")
    a.check_normalized()
    b.check_normalized()
    overlap = abs(inner_product(a, b))
    return float(np.sqrt(max(0.0, 2.0 - 2.0 * overlap)))


# -- spectral calculus ---------------------------------------------------------

def _deriv(spec: GridSpec, values: np.ndarray, axis: int) -> np.ndarray:
    k = axis_wavenumbers(spec).reshape(
        tuple(spec.points_per_axis if ax == axis else 1 for ax in range(spec.dim))
    )
    return np.real(np.fft.ifft(1j * k * np.fft.fft(values, axis=axis), axis=axis))


def spectral_gradient(field: PhaseField) -> VectorField:
    """Componentwise Fourier differentiation; exact for resolved modes."""
    spec = field.grid
    comps = tuple(_deriv(spec, field.values, ax) for ax in range(spec.dim))
    return VectorField(spec, comps)


def divergence(f: VectorField) -> PhaseField:
    """Sum of spectral partial derivatives of the components."""
    spec = f.grid
    out = np.zeros(spec.shape)
    for ax in range(spec.dim):
        out += _deriv(spec, f.components[ax], ax)
    return PhaseField(spec, out)


def laplacian(field: PhaseField) -> PhaseField:
    spec = field.grid
    vals = np.real(np.fft.ifftn(-ksq(spec) * np.fft.fftn(field.values)))
    return PhaseField(spec, vals)


def fourier_norm(spec: GridSpec, values: np.ndarray) -> float:
    """L2 norm computed from Fourier coefficients (Parseval's partner)."""
    coeffs = np.fft.fftn(values) / values.size
    return float(np.sqrt(np.sum(np.abs(coeffs) ** 2) * spec.volume))


# -- random band-limited fields (seeded; used by sweeps and tests) -------------

def random_band_limited(spec: GridSpec, rng: np.random.Generator,
                        max_mode: int = 3, amplitude: float = 1.0) -> np.ndarray:
    """Smooth random real field: trig polynomial with modes up to max_mode."""
    n = spec.points_per_axis
    coeffs = np.zeros(spec.shape, dtype=np.complex128)
    modes = [m for m in range(-max_mode, max_mode + 1)]
    grids = np.meshgrid(*(modes,) * spec.dim, indexing="ij")
    flat = np.stack([g.ravel() for g in grids], axis=1)
    for idx in flat:
        c = rng.normal() + 1j * rng.normal()
        pos = tuple(int(i) % n for i in idx)
        neg = tuple((-int(i)) % n for i in idx)
        coeffs[pos] += c
        coeffs[neg] += np.conj(c)
    field = np.real(np.fft.ifftn(coeffs)) * n**spec.dim / len(flat)
    peak = np.max(np.abs(field))
    if peak > 0:
        field *= amplitude / peak
    return field


# -- binary field container ----------------------------------------------------
#
# Layout (little endian):
#   magic   4s   b"QSGF"
#   version u8   1
#   manifold u8  0 torus, 1 line
#   dim     u8
#   ncomp   u8   number of stacked fields
#   kind    u8   0 real float64, 1 complex (interleaved float64 pairs)
#   pad     3x
#   n       u32  points per axis
#   L       f64  box half width (0.0 for torus)
# followed by ncomp row-major arrays.

_MAGIC = b"QSGF"
_HEADER = struct.Struct("<4s5B3xId")


def write_container(path, spec: GridSpec, arrays, complex_data: bool = False):
    """Write one or more grid fields to the binary container."""
    if isinstance(arrays, np.ndarray):
        arrays = [arrays]
    man = 0 if spec.manifold is Manifold.TORUS else 1
    L = float(spec.box_half_width or 0.0)
    with open(path, "wb") as fh:
        fh.write(_HEADER.pack(_MAGIC, 1, man, spec.dim, len(arrays),
                              1 if complex_data else 0, spec.points_per_axis, L))
        for a in arrays:
            _check_shape(spec, a)
            if complex_data:
                np.ascontiguousarray(a, dtype=np.complex128).tofile(fh)
            else:
                np.ascontiguousarray(a, dtype=np.float64).tofile(fh)


def read_container(path):
    """Read back (spec, [arrays], complex_data) from the binary container."""
    with open(path, "rb") as fh:
        magic, version, man, dim, ncomp, kind, n, L = _HEADER.unpack(
            fh.read(_HEADER.size)
        )
        if magic != _MAGIC:
            raise ValueError(f"{path} is not a grid field container")
        if version != 1:
            raise ValueError(f"unsupported container version {version}")
        spec = GridSpec(
            Manifold.TORUS if man == 0 else Manifold.LINE, dim, n,
            None if man == 0 else L,
        )
        dtype = np.complex128 if kind == 1 else np.float64
        count = n**dim
        arrays = [np.fromfile(fh, dtype=dtype, count=count).reshape(spec.shape)
                  for _ in range(ncomp)]
    return spec, arrays, kind == 1
