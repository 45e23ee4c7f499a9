"""Fourier multipliers built from the spherical average.

The spherical-average symbol is ``a(xi) = c_n V_{(n-2)/2}(|xi|)`` with
``c_n = 2^{(n-2)/2} Gamma(n/2)`` so that ``a(0) = 1``.  The iterated operator
Delta (A_1)^N has symbol ``m(xi) = -|xi|^2 a(xi)^N``.
"""
from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from typing import Callable

import numpy as np
from scipy import special

from .decomposition import PartitionSpec, bracket, window_phi
from .grid import (
    FREQUENCY,
    GridMismatchError,
    SampledField,
    base_bump,
    from_frequency,
    inverse_transform,
    local_patch,
    lp_norm,
)
from .special_fn import v_kernel

__all__ = [
    "Symbol",
    "apply_multiplier",
    "bernstein_bound",
    "block_gain",
    "block_pair",
    "constant_symbol",
    "gaussian_symbol",
    "laplace_iterated_symbol",
    "multi_indices",
    "sigma",
    "spectral_derivative",
    "spherical_constant",
    "spherical_symbol",
]


def sigma(n: int, N: int) -> float:
    """Regularity shift 2 - (n - 1) N / 2."""
    if n < 1 or N < 0:
        raise ValueError("need n >= 1 and N >= 0")
    return 2.0 - 0.5 * (n - 1) * N


@dataclass(frozen=True)
class Symbol:
    """A multiplier ``xi -> value``; ``radial`` is set for radial symbols.

    ``func`` receives an array whose last axis has length ``n``.
    """

    func: Callable
    n: int
    kind: str = "custom"
    N: int | None = None
    radial: Callable | None = field(default=None, compare=False)

    def __call__(self, xi):
        xi = np.asarray(xi, dtype=float)
        if xi.shape[-1] != self.n:
            raise ValueError(f"expected trailing axis of length {self.n}")
        return self.func(xi)

    def on_mesh(self, mesh):
        """Evaluate on a sparse meshgrid (list of broadcastable axes)."""
        if self.radial is not None:
            r = np.sqrt(sum(x * x for x in mesh))
            return self.radial(r)
        full = np.stack(np.broadcast_arrays(*mesh), axis=-1)
        return self.func(full)

    def __mul__(self, other: "Symbol") -> "Symbol":
        if self.n != other.n:
            raise ValueError("dimension mismatch")
        radial = None
        if self.radial is not None and other.radial is not None:
            ra, rb = self.radial, other.radial
            radial = lambda r: ra(r) * rb(r)  # noqa: E731
        fa, fb = self.func, other.func
        return Symbol(lambda xi: fa(xi) * fb(xi), self.n, "custom", None, radial)


def _radial_symbol(radial, n, kind, N=None) -> Symbol:
    return Symbol(lambda xi: radial(np.linalg.norm(xi, axis=-1)), n, kind, N, radial)


def spherical_constant(n: int) -> float:
    delta = 0.5 * (n - 2)
    return float(2.0**delta * special.gamma(0.5 * n))


def spherical_symbol(n: int) -> Symbol:
    """Symbol of the normalized spherical average in R^n (n >= 2)."""
    if n < 2:
        raise ValueError("spherical symbol needs n >= 2")
    c, delta = spherical_constant(n), 0.5 * (n - 2)
    return _radial_symbol(lambda r: c * np.asarray(v_kernel(delta, r)), n, "spherical", 1)


def laplace_iterated_symbol(n: int, N: int) -> Symbol:
    """Symbol -|xi|^2 a(xi)^N of Delta (A_1)^N; N = 0 gives the Laplacian."""
    if N < 0:
        raise ValueError("N must be >= 0")
    if N == 0:
        return _radial_symbol(lambda r: -np.asarray(r, dtype=float) ** 2, n, "laplace_iterated", 0)
    a = spherical_symbol(n).radial
    return _radial_symbol(lambda r: -np.asarray(r, dtype=float) ** 2 * a(r) ** N, n,
                          "laplace_iterated", N)


def bessel_potential_symbol(n: int, tau: float) -> Symbol:
    return _radial_symbol(lambda r: (1.0 + np.asarray(r) ** 2) ** (0.5 * tau), n, "bessel_potential")


def gaussian_symbol(n: int) -> Symbol:
    return _radial_symbol(lambda r: np.exp(-np.asarray(r) ** 2), n, "custom")


def constant_symbol(n: int, value: float = 1.0) -> Symbol:
    return _radial_symbol(lambda r: np.full(np.shape(r), value, dtype=float), n, "custom")


def apply_multiplier(f: SampledField, m: Symbol) -> SampledField:
    """m(D) f; the result keeps the input's domain tag."""
    if m.n != f.spec.dim:
        raise GridMismatchError("symbol and grid dimensions differ")
    fh = f.to_frequency()
    out = fh.with_values(fh.values * m.on_mesh(f.spec.freq_mesh()))
    return out if f.domain == FREQUENCY else out.to_space()


def _patch_points(n: int) -> int:
    return 128 if n <= 2 else 64


def block_pair(symbol: Symbol, k, lam: float, points: int | None = None,
               partition: PartitionSpec | None = None, patch=None):
    """Single-block test function and its image under ``box_k m(D)``.

    Both live on a local frequency patch around ``k`` (side ``2 lam`` unless
    ``patch`` is given), so the cost is independent of ``|k|``.

    Returns
    -------
    f, g : SampledField
        ``f_hat = base_bump((xi - k)/lam)`` and ``g_hat = phi_k m f_hat``.
    """
    k = np.asarray(k, dtype=float).reshape(-1)
    n = k.size
    partition = partition or PartitionSpec(dim=n)
    if not 0 < lam < 2 * partition.flat_radius:
        raise ValueError(f"lambda={lam} does not keep the bump inside one block")
    if patch is None:
        patch = local_patch(k, 2.0 * lam, points or _patch_points(n))
    mesh = patch.freq_mesh()
    dist = np.sqrt(sum((x - c) ** 2 for x, c in zip(mesh, k)))
    fhat = np.broadcast_to(base_bump(dist / lam), patch.shape)
    xi_full = np.stack(np.broadcast_arrays(*mesh), axis=-1)
    window = window_phi(partition, k, xi_full)
    ghat = fhat * window * symbol.on_mesh(mesh)
    return from_frequency(patch, fhat), from_frequency(patch, ghat)


def block_gain(n: int, N: int, k, p: float, lam: float, points: int | None = None) -> float:
    """||box_k Delta(A_1)^N f_{k,lam}||_p / ||f_{k,lam}||_p, by local-patch evaluation."""
    k = np.asarray(k, dtype=float).reshape(-1)
    if k.size != n:
        raise ValueError("block index has wrong dimension")
    f, g = block_pair(laplace_iterated_symbol(n, N), k, lam, points)
    return lp_norm(g, p) / lp_norm(f, p)


def multi_indices(n: int, order: int):
    """All multi-indices gamma in N^n with |gamma| <= order."""
    out = []
    for total in range(order + 1):
        for combo in itertools.product(range(total + 1), repeat=n):
            if sum(combo) == total:
                out.append(combo)
    return out


def spectral_derivative(values: np.ndarray, patch, gamma) -> np.ndarray:
    """d^gamma/dxi^gamma of a symbol sampled on a patch, via the patch FFT.

    The symbol must vanish smoothly towards the patch edges (periodic).
    """
    if not any(gamma):
        return np.asarray(values)
    kern = inverse_transform(from_frequency(patch, values))
    xs = patch.space_mesh()
    factor = 1.0
    for x, g in zip(xs, gamma):
        if g:
            factor = factor * (-1j * x) ** g
    return kern.with_values(kern.values * factor).to_frequency().values


def bernstein_bound(m: Symbol, k, p: float, points: int = 256, side: float = 4.0,
                    partition: PartitionSpec | None = None):
    """Both sides of the Bernstein multiplier estimate for the localized symbol.

    ``rhs = sum_{|gamma| <= [n(1/p - 1/2)] + 1} ||d^gamma (phi_k m)||_{L^2}`` and
    ``lhs = ||(phi_k m)^vee||_{L^p}``; returns ``(rhs, lhs)``.
    """
    p = float(p)
    if not 1.0 <= p <= 2.0:
        raise ValueError("Bernstein bound needs p in [1, 2]")
    k = np.asarray(k, dtype=float).reshape(-1)
    n = k.size
    partition = partition or PartitionSpec(dim=n)
    if side < 2 * (0.5 + partition.transition_width) + 0.2:
        raise ValueError("patch too small for the block window")
    patch = local_patch(k, side, points)
    mesh = patch.freq_mesh()
    xi_full = np.stack(np.broadcast_arrays(*mesh), axis=-1)
    local = window_phi(partition, k, xi_full) * m.on_mesh(mesh)
    order = int(np.floor(n * (1.0 / p - 0.5))) + 1
    dvol = patch.freq_spacing**n
    rhs = 0.0
    for gamma in multi_indices(n, order):
        d = spectral_derivative(local, patch, gamma)
        rhs += float(np.sqrt(dvol * np.sum(np.abs(d) ** 2)))
    lhs = lp_norm(inverse_transform(from_frequency(patch, local)), p)
    return rhs, lhs


def gain_prediction(k, n: int, N: int) -> float:
    return bracket(k) ** sigma(n, N)
