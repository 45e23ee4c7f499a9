"""Pearson random walks: N unit steps in uniformly random directions of R^n.

The characteristic function of one step is the spherical symbol ``a(|xi|)``,
so the walk's density is the radial Fourier inverse of ``a^N``:

    p_N(r) = (2 pi)^(-n/2) r^(-nu) int_0^inf a(t)^N J_nu(r t) t^(n/2) dt,
    nu = (n - 2) / 2,

and the probability of the ball of radius R is

    P(|S_N| <= R) = (2 pi)^(-n) |S^(n-1)| (2 pi R)^(n/2)
                    int_0^inf a(t)^N t^(n/2 - 1) J_(n/2)(R t) dt.

Both integrals are evaluated with Gauss-Legendre panels whose edges include
the (McMahon-estimated) zeros of the Bessel factor.  When the integrand's
envelope decays fast enough the range is truncated where the envelope tail
drops below ``tail_tol``; otherwise a Gaussian damping factor
``exp(-eps t^2)`` is applied at three values of ``eps`` and the results are
Richardson-extrapolated to ``eps = 0``.
"""
from __future__ import annotations

import csv
import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy import special

from ._workers import worker_count
from .multipliers import spherical_constant, spherical_symbol

__all__ = [
    "MCResult",
    "QuadratureError",
    "WalkSpec",
    "char_value",
    "density_radial",
    "density_radial_raw",
    "mc_walk",
    "radial_cdf",
    "sphere_area",
    "total_mass",
    "write_walk_csv",
]

log = logging.getLogger(__name__)

MC_CHUNK = 1 << 16
_GL_ORDER = 12
_T_MAX = 20000.0
_MIN_SINGULAR_RADIUS = 0.1


class QuadratureError(RuntimeError):
    """The tail or extrapolation error estimate exceeds the tolerance."""


@dataclass(frozen=True)
class WalkSpec:
    n: int
    N: int
    tail_tol: float = 1e-8
    gl_order: int = _GL_ORDER
    max_panel: float = 0.5
    damping: tuple = (1e-4, 5e-5, 2.5e-5)
    samples: int = 1_000_000
    seed: int = 0
    extra: dict = field(default_factory=dict, compare=False)

    def __post_init__(self):
        if self.n < 2:
            raise ValueError("walk dimension must be >= 2")
        if self.N < 1:
            raise ValueError("walk needs at least one step")
        if self.samples < 1000:
            raise ValueError("Monte-Carlo sample count must be >= 1000")

    @property
    def nu(self) -> float:
        return 0.5 * (self.n - 2)

    @property
    def integrable(self) -> bool:
        """True when a^N t^(n-1) is absolutely integrable."""
        return 0.5 * (self.n - 1) * self.N > self.n


def sphere_area(n: int) -> float:
    """Surface area of the unit sphere in R^n."""
    return 2.0 * math.pi ** (0.5 * n) / math.gamma(0.5 * n)


def char_value(n: int, N: int, t):
    """a(t)^N, the walk's characteristic function at radial frequency t."""
    t = np.asarray(t, dtype=float)
    if np.any(t < 0):
        raise ValueError("radial frequency must be nonnegative")
    return spherical_symbol(n).radial(t) ** N


def _panel_edges(order: float, r: float, T: float, max_panel: float) -> np.ndarray:
    """0, the zeros of J_order(r t) below T (McMahon estimates), and T,
    with long panels split so that none exceeds ``max_panel``."""
    if r > 0:
        m = np.arange(1, int(T * r / math.pi) + 3)
        zeros = (m + 0.5 * order - 0.25) * math.pi / r
        zeros = zeros[(zeros > 0) & (zeros < T)]
    else:
        zeros = np.zeros(0)
    edges = np.concatenate([[0.0], zeros, [T]])
    pieces = np.maximum(1, np.ceil(np.diff(edges) / max_panel).astype(int))
    out = [np.linspace(a, b, k + 1)[:-1] for a, b, k in zip(edges[:-1], edges[1:], pieces)]
    return np.concatenate(out + [[T]])


def _nodes(edges: np.ndarray, order: int):
    x, w = np.polynomial.legendre.leggauss(order)
    a, b = edges[:-1, None], edges[1:, None]
    half = 0.5 * (b - a)
    return (a + half * (x + 1.0)).ravel(), (half * w).ravel()


def _envelope_constant(n: int, N: int) -> float:
    # |a(t)| <= c_n sqrt(2/pi) t^{-(n-1)/2} for large t
    return (spherical_constant(n) * math.sqrt(2.0 / math.pi)) ** N


def _integrate(spec: WalkSpec, r: float, order: float, power: float, beta: float, K: float,
               pref: float, tol: float):
    """pref * int_0^inf a^N J_order(r t) t^power dt and an error estimate.

    ``K t^-beta`` bounds the envelope of the (unscaled) integrand.  The
    range is truncated where the scaled envelope tail falls below
    ``tail_tol``; the cut is capped at ``_T_MAX`` and accepted there only if
    the tail is still below ``tol``.  Otherwise the damped, extrapolated
    rule is used.
    """
    a = spherical_symbol(spec.n).radial
    if beta > 1.0:
        T = (pref * K / (spec.tail_tol * (beta - 1.0))) ** (1.0 / (beta - 1.0))
        T = min(max(T, 50.0), _T_MAX)
        tail = pref * K * T ** (1.0 - beta) / (beta - 1.0)
        if tail <= tol:
            t, w = _nodes(_panel_edges(order, r, T, spec.max_panel), spec.gl_order)
            val = float(np.sum(w * a(t) ** spec.N * special.jv(order, r * t) * t**power))
            return pref * val, tail
    eps = sorted(spec.damping, reverse=True)
    if len(eps) != 3 or not (eps[0] == 2 * eps[1] == 4 * eps[2]):
        raise ValueError("damping must be three values in ratio 4:2:1")
    T = math.sqrt(40.0 / eps[-1])
    t, w = _nodes(_panel_edges(order, r, T, spec.max_panel), spec.gl_order)
    base = w * a(t) ** spec.N * special.jv(order, r * t) * t**power
    I = [float(np.sum(base * np.exp(-e * t * t))) for e in eps]
    r1 = [2.0 * I[1] - I[0], 2.0 * I[2] - I[1]]
    val = (4.0 * r1[1] - r1[0]) / 3.0
    return pref * val, pref * abs(r1[1] - val)


def density_radial_raw(spec: WalkSpec, r: float, tol: float = 1e-6) -> float:
    """Unclipped quadrature value of p_N(r) (may be slightly negative)."""
    n, N = spec.n, spec.N
    if N == 1:
        raise ValueError("a single step has no density (its law lives on the unit sphere)")
    r = float(r)
    if not r > 0:
        raise ValueError("density needs r > 0")
    if not spec.integrable and r < _MIN_SINGULAR_RADIUS:
        raise ValueError(
            f"a^N t^(n-1) is not integrable for n={n}, N={N}; evaluate at r >= {_MIN_SINGULAR_RADIUS}"
        )
    nu = spec.nu
    pref = (2.0 * math.pi) ** (-0.5 * n) * r ** (-nu)
    beta = 0.5 * (n - 1) * (N - 1)
    K = _envelope_constant(n, N) * math.sqrt(2.0 / (math.pi * r))
    val, err = _integrate(spec, r, nu, 0.5 * n, beta, K, pref, tol)
    if err > tol:
        raise QuadratureError(f"density error estimate {err:.3g} exceeds {tol:g} at r={r}")
    return val


def density_radial(spec: WalkSpec, r: float, tol: float = 1e-6) -> float:
    """p_N(r) >= 0; small negative quadrature values are clipped and logged."""
    v = density_radial_raw(spec, r, tol)
    if v < 0:
        log.info("clipped negative density %.3g at r=%g (n=%d, N=%d)", v, r, spec.n, spec.N)
        return 0.0
    return v


def radial_cdf(spec: WalkSpec, R: float, tol: float = 1e-6) -> float:
    """P(|S_N| <= R) from the Fourier integral over the ball of radius R."""
    n, N = spec.n, spec.N
    R = float(R)
    if R <= 0:
        return 0.0
    if R >= N:
        return 1.0
    pref = (2.0 * math.pi) ** (-n) * sphere_area(n) * (2.0 * math.pi * R) ** (0.5 * n)
    beta = 0.5 * (n - 1) * N - 0.5 * n + 1.5
    K = _envelope_constant(n, N) * math.sqrt(2.0 / (math.pi * R))
    val, err = _integrate(spec, R, 0.5 * n, 0.5 * n - 1.0, beta, K, pref, tol)
    if err > tol:
        raise QuadratureError(f"CDF error estimate {err:.3g} exceeds {tol:g} at R={R}")
    return val


def total_mass(spec: WalkSpec, nodes_per_unit: int = 20) -> float:
    """int_0^N p_N(r) |S^(n-1)| r^(n-1) dr, panels split at the integers."""
    if not spec.integrable:
        raise ValueError("total mass by density quadrature needs an integrable characteristic function")
    x, w = np.polynomial.legendre.leggauss(nodes_per_unit)
    area = sphere_area(spec.n)
    total = 0.0
    for lo in range(spec.N):
        rs = lo + 0.5 * (x + 1.0)
        for r, wi in zip(rs, 0.5 * w):
            jac = area * r ** (spec.n - 1)
            # the mass only needs p(r) to within 1e-8 / jacobian
            total += wi * density_radial(spec, r, tol=max(1e-6, 1e-8 / jac)) * jac
    return total


@dataclass(frozen=True, eq=False)
class MCResult:
    """Sorted radii of the simulated walks."""

    radii: np.ndarray

    @property
    def size(self) -> int:
        return self.radii.size

    def cdf(self, r):
        return np.searchsorted(self.radii, np.asarray(r, dtype=float), side="right") / self.size

    def stderr(self, r, p=None):
        """Binomial standard error of the empirical CDF at r.

        ``p`` (e.g. a model CDF) replaces the empirical proportion when given;
        it is clipped to [1/n, 1 - 1/n] so the error never collapses to zero.
        """
        n = self.size
        p = self.cdf(r) if p is None else np.asarray(p, dtype=float)
        p = np.clip(p, 1.0 / n, 1.0 - 1.0 / n)
        return np.sqrt(p * (1.0 - p) / n)

    def histogram(self, edges):
        counts, _ = np.histogram(self.radii, bins=np.asarray(edges, dtype=float))
        return counts

    def density(self, r, width: float, n: int):
        """Histogram estimate of p_N(r) on the shell [r - w/2, r + w/2] and its SE."""
        lo, hi = max(0.0, r - 0.5 * width), r + 0.5 * width
        c = np.searchsorted(self.radii, hi, side="right") - np.searchsorted(self.radii, lo, side="left")
        vol = sphere_area(n) / n * (hi**n - lo**n)
        return c / (self.size * vol), math.sqrt(c) / (self.size * vol)


def _chunk_radii(n: int, N: int, size: int, seed_seq: np.random.SeedSequence) -> np.ndarray:
    rng = np.random.default_rng(seed_seq)
    steps = rng.standard_normal((size, N, n))
    steps /= np.linalg.norm(steps, axis=-1, keepdims=True)
    return np.linalg.norm(steps.sum(axis=1), axis=-1)


def mc_walk(spec: WalkSpec, workers: int | None = None) -> MCResult:
    """Simulate ``spec.samples`` walks.

    Samples are drawn in chunks of ``MC_CHUNK``; chunk i uses the i-th child
    of ``SeedSequence(spec.seed)``, so the result does not depend on the
    number of workers.
    """
    sizes = [MC_CHUNK] * (spec.samples // MC_CHUNK)
    if spec.samples % MC_CHUNK:
        sizes.append(spec.samples % MC_CHUNK)
    seeds = np.random.SeedSequence(spec.seed).spawn(len(sizes))
    nw = worker_count(workers)
    if nw == 1:
        parts = [_chunk_radii(spec.n, spec.N, s, q) for s, q in zip(sizes, seeds)]
    else:
        with ThreadPoolExecutor(nw) as ex:
            parts = list(ex.map(lambda sq: _chunk_radii(spec.n, spec.N, *sq), zip(sizes, seeds)))
    return MCResult(np.sort(np.concatenate(parts)))


def write_walk_csv(path, rows) -> None:
    """rows: (r, density_quadrature, density_mc, mc_stderr)."""
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["r", "density_quadrature", "density_mc", "mc_stderr"])
        for row in rows:
            w.writerow([repr(float(v)) for v in row])
