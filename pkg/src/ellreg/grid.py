"""Periodic uniform grids, sampled complex fields, and their spectral twins.

The torus [-L, L)^m stands in for R^m; all fields of interest are supported
well away from the seam, which makes the discrete Fourier transform an exact
realization of the continuum transform on band-limited data.

Conventions
-----------
Grid points are x_j = -L + j * (2L/N).  The frequency lattice is
xi = (pi/L) * k with integer k in [-N/2, N/2).  Coefficients follow

    fhat(xi) = (2L)^{-m} * integral of f(x) exp(-i xi.x) dx,

so a constant field has a single coefficient at xi = 0.
"""

from __future__ import annotations

import json
import struct
from dataclasses import dataclass

import numpy as np

from .errors import ChannelMismatch, GridMismatch


@dataclass(frozen=True)
class GridSpec:
    """Uniform periodic grid on [-L, L)^m with N points per axis."""

    dim: int
    points_per_axis: int
    half_period: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        n = self.points_per_axis
        if n < 4 or n % 2 != 0:
            raise ValueError("points_per_axis must be even and >= 4")
        if not self.half_period > 0:
            raise ValueError("half_period must be positive")

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_period / self.points_per_axis

    @property
    def volume(self) -> float:
        return (2.0 * self.half_period) ** self.dim

    @property
    def shape(self) -> tuple:
        return (self.points_per_axis,) * self.dim

    @property
    def num_points(self) -> int:
        return self.points_per_axis ** self.dim

    def axis_points(self) -> np.ndarray:
        n = self.points_per_axis
        return -self.half_period + self.spacing * np.arange(n)

    def coords(self) -> np.ndarray:
        """Grid coordinates, shape (*shape, dim)."""
        axes = [self.axis_points()] * self.dim
        mesh = np.meshgrid(*axes, indexing="ij")
        return np.stack(mesh, axis=-1)

    def axis_wavenumbers(self) -> np.ndarray:
        """Integer FFT wavenumbers k in FFT ordering."""
        n = self.points_per_axis
        return np.rint(np.fft.fftfreq(n) * n).astype(int)

    def freqs(self) -> np.ndarray:
        """Frequency lattice xi = (pi/L) k, shape (*shape, dim), FFT ordering."""
        k = self.axis_wavenumbers() * (np.pi / self.half_period)
        mesh = np.meshgrid(*([k] * self.dim), indexing="ij")
        return np.stack(mesh, axis=-1)

    def _phase(self) -> np.ndarray:
        # exp(i pi k) per axis: accounts for the grid starting at x = -L.
        sign = (-1.0) ** (self.axis_wavenumbers() % 2)
        out = sign
        for _ in range(self.dim - 1):
            out = np.multiply.outer(out, sign)
        return out


@dataclass
class Field:
    """Complex l-channel samples on a grid; shape (*grid.shape, channels)."""

    grid: GridSpec
    samples: np.ndarray

    def __post_init__(self):
        self.samples = np.asarray(self.samples, dtype=np.complex128)
        if self.samples.shape[:-1] != self.grid.shape:
            raise ValueError(
                f"sample shape {self.samples.shape} does not match grid {self.grid.shape}"
            )

    @property
    def channels(self) -> int:
        return self.samples.shape[-1]

    def copy(self) -> "Field":
        return Field(self.grid, self.samples.copy())

    def __add__(self, other):
        _check_same(self, other)
        return Field(self.grid, self.samples + other.samples)

    def __sub__(self, other):
        _check_same(self, other)
        return Field(self.grid, self.samples - other.samples)

    def __mul__(self, scalar):
        return Field(self.grid, self.samples * scalar)

    __rmul__ = __mul__


@dataclass
class SpectralField:
    """Fourier coefficients on the frequency lattice, FFT ordering."""

    grid: GridSpec
    coefficients: np.ndarray

    def __post_init__(self):
        self.coefficients = np.asarray(self.coefficients, dtype=np.complex128)
        if self.coefficients.shape[:-1] != self.grid.shape:
            raise ValueError("coefficient shape does not match grid")

    @property
    def channels(self) -> int:
        return self.coefficients.shape[-1]


def _check_same(a, b):
    if a.grid != b.grid:
        raise GridMismatch("fields live on different grids")
    if a.samples.shape[-1] != b.samples.shape[-1]:
        raise ChannelMismatch("channel counts differ")


def field_from_function(grid: GridSpec, func, channels: int | None = None) -> Field:
    """Sample func(coords) -> (*shape,) or (*shape, channels) onto a Field."""
    vals = np.asarray(func(grid.coords()), dtype=np.complex128)
    if vals.shape == grid.shape:
        vals = vals[..., None]
    return Field(grid, vals)


def constant_field(grid: GridSpec, values) -> Field:
    vec = np.atleast_1d(np.asarray(values, dtype=np.complex128))
    samples = np.broadcast_to(vec, grid.shape + vec.shape).copy()
    return Field(grid, samples)


def dft(f: Field) -> SpectralField:
    axes = tuple(range(f.grid.dim))
    raw = np.fft.fftn(f.samples, axes=axes)
    coeff = raw * (f.grid._phase()[..., None] / f.grid.num_points)
    return SpectralField(f.grid, coeff)


def idft(F: SpectralField) -> Field:
    axes = tuple(range(F.grid.dim))
    pre = F.coefficients * F.grid._phase()[..., None]
    samples = np.fft.ifftn(pre, axes=axes) * F.grid.num_points
    return Field(F.grid, samples)


def pointwise_norm(f: Field) -> np.ndarray:
    """Euclidean norm over channels at every grid point."""
    return np.sqrt(np.sum(np.abs(f.samples) ** 2, axis=-1))


def lp_norm(f: Field, p: float, mask: np.ndarray | None = None) -> float:
    """Quadrature L^p norm; uniform-weight Riemann sum, sample max for p = inf."""
    mag = pointwise_norm(f)
    if mask is not None:
        mag = mag[mask]
    if mag.size == 0:
        return 0.0
    if np.isinf(p):
        return float(np.max(mag))
    w = f.grid.spacing ** f.grid.dim
    return float((w * np.sum(mag ** p)) ** (1.0 / p))


def apply_multiplier(f: Field, values: np.ndarray) -> Field:
    """Multiply coefficients by a lattice array: scalar (*shape,) or matrix (*shape, l, l)."""
    F = dft(f)
    if values.ndim == f.grid.dim:
        coeff = F.coefficients * values[..., None]
    else:
        coeff = np.einsum("...ij,...j->...i", values, F.coefficients)
    return idft(SpectralField(f.grid, coeff))


def spectral_derivative(f: Field, alpha) -> Field:
    """Exact band-limited partial derivative of multi-index alpha."""
    alpha = tuple(int(a) for a in alpha)
    if len(alpha) != f.grid.dim:
        raise ValueError("multi-index length must equal grid dimension")
    if all(a == 0 for a in alpha):
        return f.copy()
    xi = f.grid.freqs()
    mult = np.ones(f.grid.shape, dtype=np.complex128)
    for axis, a in enumerate(alpha):
        if a:
            mult = mult * (1j * xi[..., axis]) ** a
    return apply_multiplier(f, mult)


def translate(f: Field, h) -> Field:
    """Band-limited translation x -> x + h via the phase exp(i xi.h)."""
    h = np.asarray(h, dtype=float)
    if h.shape != (f.grid.dim,):
        raise ValueError("shift vector has wrong length")
    xi = f.grid.freqs()
    phase = np.exp(1j * np.tensordot(xi, h, axes=([-1], [0])))
    return apply_multiplier(f, phase)


def random_band_limited_field(
    grid: GridSpec, channels: int, rng: np.random.Generator, band_fraction: float = 0.25
) -> Field:
    """Random smooth field: Gaussian coefficients with a Gaussian spectral taper."""
    xi = grid.freqs()
    cutoff = band_fraction * np.pi * grid.points_per_axis / (2.0 * grid.half_period)
    taper = np.exp(-np.sum((xi / cutoff) ** 2, axis=-1))
    shape = grid.shape + (channels,)
    coeff = (rng.standard_normal(shape) + 1j * rng.standard_normal(shape)) * taper[..., None]
    return idft(SpectralField(grid, coeff))


# ---------------------------------------------------------------------------
# Serialization: JSON for small fixtures, little-endian binary otherwise.
# ---------------------------------------------------------------------------

_MAGIC = b"ELRF"


def field_to_json(f: Field) -> dict:
    flat = f.samples.reshape(-1)
    return {
        "dim": f.grid.dim,
        "points_per_axis": f.grid.points_per_axis,
        "half_period": f.grid.half_period,
        "channels": f.channels,
        "samples": [[float(z.real), float(z.imag)] for z in flat],
    }


def field_from_json(obj: dict) -> Field:
    grid = GridSpec(obj["dim"], obj["points_per_axis"], obj["half_period"])
    flat = np.array([complex(re, im) for re, im in obj["samples"]], dtype=np.complex128)
    return Field(grid, flat.reshape(grid.shape + (obj["channels"],)))


def save_field(path, f: Field):
    path = str(path)
    if path.endswith(".json"):
        with open(path, "w") as fh:
            json.dump(field_to_json(f), fh)
        return
    header = struct.pack(
        "<4scIIdI", _MAGIC, b"<", f.grid.dim, f.grid.points_per_axis,
        f.grid.half_period, f.channels,
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.samples, dtype="<c16").tobytes())


def load_field(path) -> Field:
    path = str(path)
    if path.endswith(".json"):
        with open(path) as fh:
            return field_from_json(json.load(fh))
    with open(path, "rb") as fh:
        head = fh.read(struct.calcsize("<4scIIdI"))
        magic, endian, dim, n, L, channels = struct.unpack("<4scIIdI", head)
        if magic != _MAGIC:
            raise ValueError("not an ellreg field file")
        if endian != b"<":
            raise ValueError("only little-endian field files are supported")
        grid = GridSpec(dim, n, L)
        data = np.frombuffer(fh.read(), dtype="<c16").astype(np.complex128)
    return Field(grid, data.reshape(grid.shape + (channels,)))
