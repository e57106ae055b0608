"""Periodic grids, Fourier-space vector fields and the basic spectral operators.

Fields are stored as full (not half-complex) FFT coefficients normalised by the
number of grid points, so a unit coefficient at wavenumber ``xi`` is the
physical field ``exp(i xi . x)`` and Sobolev norms are plain mode sums.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

__all__ = [
    "Grid",
    "SpectralField",
    "make_grid",
    "to_physical",
    "from_physical",
    "sobolev_norm",
    "sobolev_inner",
    "leray_project",
    "derivative",
    "divergence_residual",
    "save_checkpoint",
    "load_checkpoint",
]

DIVFREE_TOL = 1e-12


@dataclass(frozen=True, eq=False)
class Grid:
    """Uniform periodic grid on the torus ``[0, length)^dim``."""

    dim: int
    n: int
    length: float = 2 * np.pi

    def __post_init__(self):
        if self.dim not in (2, 3):
            raise ValueError(f"dim must be 2 or 3, got {self.dim}")
        if self.n < 8 or self.n % 2:
            raise ValueError(f"n must be even and >= 8, got {self.n}")
        if not self.length > 0:
            raise ValueError("length must be positive")

    @property
    def shape(self) -> tuple[int, ...]:
        return (self.n,) * self.dim

    @property
    def dx(self) -> float:
        return self.length / self.n

    @property
    def volume(self) -> float:
        return self.length**self.dim

    @cached_property
    def integer_wavenumbers(self) -> np.ndarray:
        """Integer lattice index per mode, shape ``(dim, n, ..., n)``, FFT order."""
        k1 = np.fft.fftfreq(self.n, d=1.0 / self.n).astype(np.int64)
        k = np.stack(np.meshgrid(*([k1] * self.dim), indexing="ij"))
        k.flags.writeable = False
        return k

    @cached_property
    def wavenumbers(self) -> np.ndarray:
        """Physical angular wavenumbers ``2 pi / length * integer index``."""
        k = (2 * np.pi / self.length) * self.integer_wavenumbers
        k.flags.writeable = False
        return k

    @cached_property
    def k2(self) -> np.ndarray:
        k2 = np.sum(self.wavenumbers**2, axis=0)
        k2.flags.writeable = False
        return k2

    @cached_property
    def kmag(self) -> np.ndarray:
        kmag = np.sqrt(self.k2)
        kmag.flags.writeable = False
        return kmag

    @cached_property
    def dealias_mask(self) -> np.ndarray:
        """True iff every integer index satisfies ``|xi_i| <= n // 3``."""
        mask = np.all(np.abs(self.integer_wavenumbers) <= self.n // 3, axis=0)
        mask.flags.writeable = False
        return mask

    @cached_property
    def coordinates(self) -> np.ndarray:
        x1 = np.arange(self.n) * self.dx
        return np.stack(np.meshgrid(*([x1] * self.dim), indexing="ij"))

    def sobolev_weight(self, s: float) -> np.ndarray:
        return (1.0 + self.k2) ** s

    def __eq__(self, other):
        if not isinstance(other, Grid):
            return NotImplemented
        return (self.dim, self.n, self.length) == (other.dim, other.n, other.length)

    def __hash__(self):
        return hash((self.dim, self.n, self.length))


def make_grid(dim: int, n: int, length: float = 2 * np.pi) -> Grid:
    return Grid(dim=dim, n=n, length=float(length))


@dataclass(frozen=True, eq=False)
class SpectralField:
    """A vector field given by its Fourier coefficients, shape ``(dim, n, ..., n)``.

    The coefficient array is made read-only on construction; operations always
    return new fields.
    """

    grid: Grid
    coeffs: np.ndarray
    is_divfree: bool = field(default=False)

    def __post_init__(self):
        coeffs = np.array(self.coeffs, dtype=np.complex128)
        expected = (self.grid.dim,) + self.grid.shape
        if coeffs.shape != expected:
            raise ValueError(f"coefficient shape {coeffs.shape} != {expected}")
        coeffs.flags.writeable = False
        object.__setattr__(self, "coeffs", coeffs)

    @classmethod
    def zeros(cls, grid: Grid) -> "SpectralField":
        return cls(grid, np.zeros((grid.dim,) + grid.shape, complex), is_divfree=True)

    @classmethod
    def single_mode(cls, grid: Grid, index, amplitude) -> "SpectralField":
        """Field with one nonzero lattice coefficient (not Hermitian in general)."""
        coeffs = np.zeros((grid.dim,) + grid.shape, complex)
        idx = tuple(int(i) % grid.n for i in index)
        coeffs[(slice(None),) + idx] = amplitude
        return cls(grid, coeffs)

    def with_coeffs(self, coeffs, is_divfree: bool | None = None) -> "SpectralField":
        flag = self.is_divfree if is_divfree is None else is_divfree
        return SpectralField(self.grid, coeffs, is_divfree=flag)

    def __add__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs + other.coeffs,
                                self.is_divfree and other.is_divfree)

    def __sub__(self, other: "SpectralField") -> "SpectralField":
        return self.with_coeffs(self.coeffs - other.coeffs,
                                self.is_divfree and other.is_divfree)

    def __mul__(self, scalar) -> "SpectralField":
        return self.with_coeffs(scalar * self.coeffs)

    __rmul__ = __mul__

    def __neg__(self) -> "SpectralField":
        return self.with_coeffs(-self.coeffs)

    def hermitian_defect(self) -> float:
        """Max of ``|c(-xi) - conj(c(xi))|`` over all modes and components."""
        axes = tuple(range(1, self.grid.dim + 1))
        flipped = np.roll(np.flip(self.coeffs, axis=axes), 1, axis=axes)
        return float(np.max(np.abs(flipped - np.conj(self.coeffs)), initial=0.0))

    def is_hermitian(self, tol: float = 1e-12) -> bool:
        scale = max(float(np.max(np.abs(self.coeffs), initial=0.0)), 1.0)
        return self.hermitian_defect() <= tol * scale


def to_physical(f: SpectralField) -> np.ndarray:
    """Sample the field on the grid, shape ``(dim, n, ..., n)``.

    Real output when the coefficients are Hermitian, complex otherwise.
    """
    axes = tuple(range(1, f.grid.dim + 1))
    values = np.fft.ifftn(f.coeffs, axes=axes) * f.grid.n**f.grid.dim
    if f.is_hermitian():
        return values.real.copy()
    return values


def from_physical(array, grid: Grid) -> SpectralField:
    array = np.asarray(array)
    expected = (grid.dim,) + grid.shape
    if array.shape != expected:
        raise ValueError(f"array shape {array.shape} != {expected}")
    axes = tuple(range(1, grid.dim + 1))
    coeffs = np.fft.fftn(array, axes=axes) / grid.n**grid.dim
    if np.isrealobj(array):
        coeffs = hermitian_part(coeffs, grid.dim)
    return SpectralField(grid, coeffs)


def hermitian_part(coeffs: np.ndarray, dim: int) -> np.ndarray:
    """``(c(xi) + conj(c(-xi))) / 2``: the coefficients of the real part of the field."""
    axes = tuple(range(1, dim + 1))
    mirrored = np.conj(np.roll(np.flip(coeffs, axis=axes), 1, axis=axes))
    return 0.5 * (coeffs + mirrored)


def _scalar_fft(values: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.fftn(values) / grid.n**grid.dim


def _scalar_ifft(coeffs: np.ndarray, grid: Grid) -> np.ndarray:
    return np.fft.ifftn(coeffs).real * grid.n**grid.dim


def sobolev_norm(f: SpectralField, s: float) -> float:
    """``(sum_xi (1+|xi|^2)^s |f(xi)|^2)^(1/2)`` summed over components."""
    power = np.sum(np.abs(f.coeffs) ** 2, axis=0)
    return float(np.sqrt(np.sum(f.grid.sobolev_weight(s) * power)))


def sobolev_inner(f: SpectralField, g: SpectralField, s: float) -> float:
    """Real part of the ``H^s`` inner product."""
    prod = np.sum(f.coeffs * np.conj(g.coeffs), axis=0)
    return float(np.real(np.sum(f.grid.sobolev_weight(s) * prod)))


def leray_project(f: SpectralField) -> SpectralField:
    """Orthogonal projection onto divergence-free fields, mode by mode."""
    k = f.grid.wavenumbers
    k2 = f.grid.k2
    safe = np.where(k2 == 0, 1.0, k2)
    kdotv = np.sum(k * f.coeffs, axis=0)
    out = f.coeffs - k * (kdotv / safe)
    return f.with_coeffs(out, is_divfree=True)


def derivative(f: SpectralField, axis: int) -> SpectralField:
    if not 0 <= axis < f.grid.dim:
        raise ValueError(f"axis {axis} out of range for dim {f.grid.dim}")
    return f.with_coeffs(1j * f.grid.wavenumbers[axis] * f.coeffs)


def divergence_residual(f: SpectralField) -> float:
    """Max over modes of ``|xi . f(xi)|``."""
    kdotv = np.sum(f.grid.wavenumbers * f.coeffs, axis=0)
    return float(np.max(np.abs(kdotv), initial=0.0))


def dealias(f: SpectralField) -> SpectralField:
    return f.with_coeffs(f.coeffs * f.grid.dealias_mask)


# -- checkpoints -------------------------------------------------------------

_MAGIC = b"LASF"
_VERSION = 1
_HEADER = struct.Struct("<4sIIII")


def save_checkpoint(f: SpectralField, path) -> None:
    """Write the header then little-endian (re, im) float64 pairs, component-major."""
    header = _HEADER.pack(_MAGIC, _VERSION, f.grid.dim, f.grid.n, f.coeffs.shape[0])
    body = np.ascontiguousarray(f.coeffs).view("<f8").astype("<f8", copy=False)
    with open(Path(path), "wb") as fh:
        fh.write(header)
        fh.write(body.tobytes(order="C"))


def load_checkpoint(path, length: float = 2 * np.pi) -> SpectralField:
    data = Path(path).read_bytes()
    if len(data) < _HEADER.size:
        raise ValueError("truncated checkpoint header")
    magic, version, dim, n, ncomp = _HEADER.unpack_from(data)
    if magic != _MAGIC:
        raise ValueError(f"bad magic {magic!r}")
    if version != _VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")
    grid = make_grid(dim, n, length)
    values = np.frombuffer(data, dtype="<f8", offset=_HEADER.size)
    expected = 2 * ncomp * n**dim
    if values.size != expected:
        raise ValueError(f"expected {expected} float64 values, found {values.size}")
    coeffs = values.view(np.complex128).reshape((ncomp,) + grid.shape)
    field_ = SpectralField(grid, coeffs)
    scale = max(float(np.max(np.abs(coeffs), initial=0.0)), 1.0)
    divfree = divergence_residual(field_) <= DIVFREE_TOL * scale
    return field_.with_coeffs(field_.coeffs, is_divfree=divfree)
