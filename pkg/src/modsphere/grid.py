"""Periodized sampling grids standing in for functions on R^n.

Conventions
-----------
The continuum transform is ``f_hat(xi) = int f(x) exp(-i x.xi) dx`` with
inverse ``f(x) = (2 pi)^-n int f_hat(xi) exp(i x.xi) dxi``.  A grid samples
the torus ``[-R, R)^n`` at ``M`` points per axis (spacing ``h = 2R/M``) and
its dual lattice ``xi = freq_center + (pi/R) * m``.

A nonzero ``freq_center`` gives a *local patch*: the stored space-domain
values are the demodulated envelope ``exp(-i c.x) f(x)``.  Moduli, and so
every L^p norm, are unaffected by the demodulation.
"""
from __future__ import annotations

import struct
from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

__all__ = [
    "GridMismatchError",
    "GridSpec",
    "SampledField",
    "SupportError",
    "base_bump",
    "default_grid",
    "dump_field",
    "forward_transform",
    "from_space",
    "from_frequency",
    "inverse_transform",
    "load_field",
    "local_patch",
    "lp_norm",
    "smooth_step",
    "synth_block_bump",
]

SPACE = "space"
FREQUENCY = "frequency"


class GridMismatchError(ValueError):
    pass


class SupportError(ValueError):
    """A requested frequency support does not fit (or is not resolved) on the grid."""


@dataclass(frozen=True)
class GridSpec:
    dim: int
    half_period: float
    points: int
    freq_center: tuple = None

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if self.half_period <= 0:
            raise ValueError("half_period must be positive")
        m = self.points
        if m < 16 or m & (m - 1):
            raise ValueError(f"points per axis must be a power of two >= 16, got {m}")
        c = self.freq_center
        c = (0.0,) * self.dim if c is None else tuple(float(v) for v in c)
        if len(c) != self.dim:
            raise ValueError("freq_center length must equal dim")
        object.__setattr__(self, "freq_center", c)

    @property
    def spacing(self) -> float:
        return 2.0 * self.half_period / self.points

    @property
    def freq_spacing(self) -> float:
        return np.pi / self.half_period

    @property
    def nyquist(self) -> float:
        """Largest |xi_i - c_i| represented on the grid."""
        return 0.5 * self.points * self.freq_spacing

    @property
    def shape(self) -> tuple:
        return (self.points,) * self.dim

    @property
    def cell_volume(self) -> float:
        return self.spacing**self.dim

    def space_axis(self) -> np.ndarray:
        return -self.half_period + self.spacing * np.arange(self.points)

    def freq_offsets_axis(self) -> np.ndarray:
        """Offsets xi_i - c_i along one axis, in FFT order."""
        return 2.0 * np.pi * np.fft.fftfreq(self.points, d=self.spacing)

    def freq_axes(self) -> list:
        off = self.freq_offsets_axis()
        return [c + off for c in self.freq_center]

    def space_mesh(self) -> list:
        ax = self.space_axis()
        return np.meshgrid(*([ax] * self.dim), indexing="ij", sparse=True)

    def freq_mesh(self) -> list:
        return np.meshgrid(*self.freq_axes(), indexing="ij", sparse=True)

    def freq_points(self) -> np.ndarray:
        """Array of shape ``shape + (dim,)`` holding every lattice frequency."""
        mesh = np.meshgrid(*self.freq_axes(), indexing="ij")
        return np.stack(mesh, axis=-1)

    def freq_norm(self) -> np.ndarray:
        return np.sqrt(sum(x * x for x in self.freq_mesh()))

    def _sign(self) -> np.ndarray:
        # exp(i R xi) with xi = pi m / R collapses to (-1)^m
        m = np.rint(np.fft.fftfreq(self.points) * self.points).astype(np.int64)
        s = np.where(m % 2 == 0, 1.0, -1.0)
        grids = np.meshgrid(*([s] * self.dim), indexing="ij", sparse=True)
        out = grids[0]
        for g in grids[1:]:
            out = out * g
        return out


_DEFAULT_GRIDS = {1: (20.0, 1024), 2: (32.0, 512), 3: (16.0, 256)}


def default_grid(dim: int) -> GridSpec:
    """Experiment defaults: R = 32, M = 512 for n = 2 and R = 16, M = 256 for n = 3."""
    if dim not in _DEFAULT_GRIDS:
        raise ValueError(f"no default grid for dimension {dim}")
    R, M = _DEFAULT_GRIDS[dim]
    return GridSpec(dim, R, M)


def local_patch(center: Sequence[float], side: float, points: int = 64) -> GridSpec:
    """Grid whose frequency lattice covers a cube of the given side around ``center``."""
    center = tuple(float(c) for c in np.atleast_1d(center))
    return GridSpec(dim=len(center), half_period=np.pi * points / side, points=points,
                    freq_center=center)


@dataclass(frozen=True, eq=False)
class SampledField:
    spec: GridSpec
    domain: str
    values: np.ndarray = field(repr=False)

    def __post_init__(self):
        if self.domain not in (SPACE, FREQUENCY):
            raise ValueError(f"unknown domain tag {self.domain!r}")
        v = np.array(self.values, dtype=complex)
        if v.shape != self.spec.shape:
            raise GridMismatchError(f"values shape {v.shape} != grid shape {self.spec.shape}")
        v.flags.writeable = False
        object.__setattr__(self, "values", v)

    def with_values(self, values) -> "SampledField":
        return SampledField(self.spec, self.domain, values)

    def to_space(self) -> "SampledField":
        return self if self.domain == SPACE else inverse_transform(self)

    def to_frequency(self) -> "SampledField":
        return self if self.domain == FREQUENCY else forward_transform(self)

    def __add__(self, other):
        if not isinstance(other, SampledField):
            return NotImplemented
        _check_same(self, other)
        if self.domain != other.domain:
            other = other.to_space() if self.domain == SPACE else other.to_frequency()
        return self.with_values(self.values + other.values)

    def __mul__(self, alpha):
        return self.with_values(alpha * self.values)

    __rmul__ = __mul__


def _check_same(f: SampledField, g: SampledField) -> None:
    if f.spec != g.spec:
        raise GridMismatchError("fields live on different grids")


def from_space(spec: GridSpec, values) -> SampledField:
    return SampledField(spec, SPACE, values)


def from_frequency(spec: GridSpec, values) -> SampledField:
    return SampledField(spec, FREQUENCY, values)


def forward_transform(f: SampledField) -> SampledField:
    """Riemann-sum approximation of int f(x) exp(-i x.xi) dx on the grid lattice."""
    if f.domain != SPACE:
        raise GridMismatchError("forward_transform expects a space-domain field")
    spec = f.spec
    values = spec.cell_volume * spec._sign() * np.fft.fftn(f.values)
    return SampledField(spec, FREQUENCY, values)


def inverse_transform(f: SampledField) -> SampledField:
    if f.domain != FREQUENCY:
        raise GridMismatchError("inverse_transform expects a frequency-domain field")
    spec = f.spec
    values = np.fft.ifftn(spec._sign() * f.values) / spec.cell_volume
    return SampledField(spec, SPACE, values)


def lp_norm(f: SampledField, p: float) -> float:
    """Quadrature L^p norm ``(h^n sum |f|^p)^(1/p)``; ``p = inf`` gives the max."""
    p = float(p)
    if not p >= 1.0:
        raise ValueError(f"p must be >= 1, got {p}")
    a = np.abs(f.to_space().values)
    if np.isinf(p):
        return float(a.max())
    if p == 2.0:
        return float(np.sqrt(f.spec.cell_volume * np.sum(a * a)))
    return float((f.spec.cell_volume * np.sum(a**p)) ** (1.0 / p))


def smooth_step(t, width: float):
    """C-infinity step: 0 for t <= -width, 1 for t >= width, increasing between.

    Values outside the transition band are exactly 0.0 or 1.0.
    """
    if not 0 < width:
        raise ValueError("transition width must be positive")
    t = np.asarray(t, dtype=float)
    u = (t + width) / (2.0 * width)
    inside = (u > 0.0) & (u < 1.0)
    uc = np.where(inside, u, 0.5)
    a = np.exp(-1.0 / uc)
    b = np.exp(-1.0 / (1.0 - uc))
    out = np.where(u >= 1.0, 1.0, 0.0)
    return np.where(inside, a / (a + b), out)


def base_bump(xi_norm):
    """Radial bump: 1 on |xi| <= 1/4, 0 on |xi| >= 1/2, smooth in between."""
    return 1.0 - smooth_step(np.asarray(xi_norm, dtype=float) - 0.375, 0.125)


def synth_block_bump(spec: GridSpec, center: Sequence[float], width: float) -> SampledField:
    """Frequency-domain field ``base_bump((xi - center) / width)``.

    Its frequency support is the open ball ``|xi - center| < width / 2``.
    """
    center = np.asarray(center, dtype=float).reshape(-1)
    if center.size != spec.dim:
        raise GridMismatchError("center dimension does not match grid")
    if not width > 0:
        raise ValueError("bump width must be positive")
    c0 = np.asarray(spec.freq_center)
    reach = np.max(np.abs(center - c0)) + 0.5 * width
    if reach >= spec.nyquist:
        raise SupportError(
            f"bump support reaches {reach:.4g}, beyond the grid's Nyquist range {spec.nyquist:.4g}"
        )
    mesh = spec.freq_mesh()
    dist = np.sqrt(sum((x - c) ** 2 for x, c in zip(mesh, center)))
    values = base_bump(dist / width)
    if not np.any(values > 0):
        raise SupportError("bump support contains no grid frequency; refine the grid")
    return SampledField(spec, FREQUENCY, np.broadcast_to(values, spec.shape))


_MAGIC = b"MSPHFLD1"
_HEADER = struct.Struct("<8sIIdII4d")  # 64 bytes


def dump_field(f: SampledField, path) -> None:
    """Write a field as a 64-byte header followed by little-endian complex128 data."""
    spec = f.spec
    if spec.dim > 4:
        raise ValueError("binary dump supports dim <= 4")
    center = list(spec.freq_center) + [0.0] * (4 - spec.dim)
    tag = 0 if f.domain == SPACE else 1
    header = _HEADER.pack(_MAGIC, spec.dim, spec.points, spec.half_period, tag, 16, *center)
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(np.ascontiguousarray(f.values, dtype="<c16").tobytes())


def load_field(path) -> SampledField:
    with open(path, "rb") as fh:
        raw = fh.read()
    magic, dim, points, R, tag, itemsize, *center = _HEADER.unpack(raw[: _HEADER.size])
    if magic != _MAGIC:
        raise ValueError("not a modsphere field dump")
    dtype = "<c16" if itemsize == 16 else "<c8"
    spec = GridSpec(dim, R, points, tuple(center[:dim]))
    values = np.frombuffer(raw[_HEADER.size:], dtype=dtype).reshape(spec.shape)
    return SampledField(spec, SPACE if tag == 0 else FREQUENCY, values)
