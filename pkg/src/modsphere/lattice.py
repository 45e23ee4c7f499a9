"""Integer lattice points in annuli and the resonant shells of the Bessel phase.

Counting uses exact integer thresholds: ``|k| <= r`` is tested as
``|k|^2 <= floor(r^2)`` and ``|k| >= r`` as ``|k|^2 >= ceil(r^2)``.
"""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass
from typing import Iterable

import numpy as np

__all__ = [
    "Annulus",
    "BudgetError",
    "EPS0",
    "RHO",
    "EmptyShellError",
    "ResonantShell",
    "annulus_count",
    "annulus_points",
    "ball_count",
    "closest_point",
    "density_ratio",
    "density_annuli",
    "phase",
    "resonant_interval",
    "resonant_shell",
    "select_representatives",
    "write_shell_csv",
]

PHASE_MARGIN = 0.07
EPS0 = math.sin(PHASE_MARGIN)
RHO = EPS0 / 4.0
DEFAULT_POINT_BUDGET = 5_000_000


class BudgetError(RuntimeError):
    """Enumeration would exceed the configured point budget."""


class EmptyShellError(ValueError):
    def __init__(self, message, j=None):
        super().__init__(message)
        self.j = j


@dataclass(frozen=True)
class Annulus:
    dim: int
    r_lo: float
    r_hi: float

    def __post_init__(self):
        if self.dim < 1:
            raise ValueError("dim must be >= 1")
        if not 0 <= self.r_lo <= self.r_hi:
            raise ValueError(f"need 0 <= r_lo <= r_hi, got [{self.r_lo}, {self.r_hi}]")

    @property
    def sq_bounds(self) -> tuple:
        """Integer bounds (lo, hi) on |k|^2."""
        return math.ceil(self.r_lo * self.r_lo), math.floor(self.r_hi * self.r_hi)

    def contains(self, k) -> bool:
        s = sum(int(v) * int(v) for v in k)
        lo, hi = self.sq_bounds
        return lo <= s <= hi


def phase(r, n: int):
    """u(r) = sin(r - n pi / 4 + 3 pi / 4)."""
    return np.sin(np.asarray(r) - n * np.pi / 4 + 3 * np.pi / 4)


def resonant_interval(n: int, j: int) -> tuple:
    """Radii in shell j on which |u(r)| >= sin(0.07)."""
    if j < 1:
        raise ValueError("shell index j must be >= 1")
    shift = n * math.pi / 4 - 3 * math.pi / 4
    return (j * math.pi + shift + PHASE_MARGIN, (j + 1) * math.pi + shift - PHASE_MARGIN)


@dataclass(frozen=True)
class ResonantShell:
    j: int
    n: int

    @property
    def interval(self) -> tuple:
        return resonant_interval(self.n, self.j)

    @property
    def annulus(self) -> Annulus:
        lo, hi = self.interval
        return Annulus(self.n, lo, hi)

    epsilon0 = EPS0
    rho = RHO


def resonant_shell(n: int, j: int) -> Annulus:
    return ResonantShell(j, n).annulus


def density_annuli(n: int, j: int) -> tuple:
    """The plain annulus [j pi, (j+1) pi] and its 0.07-trimmed core."""
    outer = Annulus(n, j * math.pi, (j + 1) * math.pi)
    inner = Annulus(n, j * math.pi + PHASE_MARGIN, (j + 1) * math.pi - PHASE_MARGIN)
    return outer, inner


def _isqrt_array(v: np.ndarray) -> np.ndarray:
    """floor(sqrt(v)) for nonnegative int64 arrays (exact below 2**52)."""
    s = np.floor(np.sqrt(v.astype(float))).astype(np.int64)
    s = np.where((s + 1) * (s + 1) <= v, s + 1, s)
    return np.where(s * s > v, s - 1, s)


def ball_count(n: int, t: int) -> int:
    """#{k in Z^n : |k|^2 <= t}."""
    if t < 0:
        return 0
    if n == 1:
        return 2 * math.isqrt(t) + 1
    b = math.isqrt(t)
    if n == 2:
        # rows x and -x contribute equally
        x = np.arange(1, b + 1, dtype=np.int64)
        rows = 2 * _isqrt_array(t - x * x) + 1
        return int(2 * np.sum(rows)) + 2 * b + 1
    x = np.arange(-b, b + 1, dtype=np.int64)
    return sum(ball_count(n - 1, int(r)) for r in t - x * x)


def annulus_count(a: Annulus) -> int:
    lo, hi = a.sq_bounds
    if lo > hi:
        return 0
    return ball_count(a.dim, hi) - ball_count(a.dim, lo - 1)


def _prefixes(n: int, hi: int, budget: int) -> np.ndarray:
    """All (n-1)-tuples with squared norm <= hi, lexicographic."""
    b = math.isqrt(hi)
    if (2 * b + 1) ** (n - 1) > budget * 4:
        raise BudgetError(f"bounding box of radius {b} in dimension {n} exceeds the budget")
    axis = np.arange(-b, b + 1, dtype=np.int64)
    if n == 1:
        return np.zeros((1, 0), dtype=np.int64)
    grids = np.meshgrid(*([axis] * (n - 1)), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    return pts[np.sum(pts * pts, axis=1) <= hi]


def annulus_points(a: Annulus, budget: int = DEFAULT_POINT_BUDGET) -> np.ndarray:
    """Lattice points of an annulus, shape ``(count, n)``, lexicographic order."""
    lo, hi = a.sq_bounds
    n = a.dim
    if lo > hi:
        return np.zeros((0, n), dtype=np.int64)
    pre = _prefixes(n, hi, budget)
    s = np.sum(pre * pre, axis=1)
    top = _isqrt_array(hi - s)
    need = lo - s
    inner = np.where(need > 0, _isqrt_array(np.maximum(need - 1, 0)) + 1, 0)
    ok = top >= inner
    pre, top, inner = pre[ok], top[ok], inner[ok]
    # last coordinate runs over [-top, -inner] and [inner, top] (merged when inner == 0)
    whole = inner == 0
    split = ~whole
    starts = np.concatenate([-top[whole], -top[split], inner[split]])
    lengths = np.concatenate([2 * top[whole] + 1, (top - inner + 1)[split],
                              (top - inner + 1)[split]])
    owner = np.concatenate([np.flatnonzero(whole), np.flatnonzero(split),
                            np.flatnonzero(split)])
    key = np.lexsort((starts, owner))
    starts, lengths, owner = starts[key], lengths[key], owner[key]
    total = int(lengths.sum())
    if total > budget:
        raise BudgetError(f"annulus holds {total} points, over budget {budget}")
    out = np.empty((total, n), dtype=np.int64)
    seg = np.repeat(np.arange(lengths.size), lengths)
    offset = np.arange(total) - np.repeat(np.cumsum(lengths) - lengths, lengths)
    out[:, :-1] = pre[owner[seg]]
    out[:, -1] = starts[seg] + offset
    return out


def _sorted_prefixes(m: int, hi: int, budget: int) -> np.ndarray:
    """Nondecreasing nonnegative m-tuples with squared norm <= hi."""
    if m == 0:
        return np.zeros((1, 0), dtype=np.int64)
    # in a sorted n-tuple every entry but the last obeys 2 x^2 <= |k|^2
    b = math.isqrt(hi // 2)
    if (b + 1) ** m > budget * 4:
        raise BudgetError(f"sorted prefix box of radius {b} in dimension {m} exceeds the budget")
    axis = np.arange(b + 1, dtype=np.int64)
    if m == 1:
        return axis[:, None]
    grids = np.meshgrid(*([axis] * m), indexing="ij")
    pts = np.stack([g.ravel() for g in grids], axis=-1)
    keep = np.all(np.diff(pts, axis=1) >= 0, axis=1) & (np.sum(pts * pts, axis=1) <= hi)
    return pts[keep]


def closest_point(n: int, target: float, lo: float, hi: float, budget: int = DEFAULT_POINT_BUDGET):
    """Lattice point with |k| in [lo, hi] closest to ``target``.

    Ties go to the lexicographically smallest point.  Returns None if the
    annulus is empty.  Only sorted nonnegative representatives are scanned;
    the signed, permuted winner is rebuilt at the end.
    """
    lo2, hi2 = Annulus(n, lo, hi).sq_bounds
    if lo2 > hi2:
        return None
    pre = _sorted_prefixes(n - 1, hi2, budget)
    s = np.sum(pre * pre, axis=1)
    last = pre[:, -1] if n > 1 else np.zeros(len(pre), dtype=np.int64)
    base = _isqrt_array(np.maximum(math.floor(target * target) - s, 0))
    found = []
    for z in (base, base + 1):
        sq = s + z * z
        found.append(sq[(z >= last) & (sq >= lo2) & (sq <= hi2)])
    sq = np.concatenate(found)
    if sq.size == 0:
        return None
    dist = np.abs(np.sqrt(sq.astype(float)) - target)
    candidates = []
    for t in np.unique(sq[dist == dist.min()]):
        rest = int(t) - s
        ok = rest >= 0
        z = _isqrt_array(np.where(ok, rest, 0))
        hit = ok & (z * z == rest) & (z >= last)
        reps = np.concatenate([pre[hit], z[hit, None]], axis=1)
        desc = -np.sort(-reps, axis=1)
        best = desc[np.lexsort(desc.T[::-1])[-1]]
        candidates.append(tuple(int(-v) for v in best))
    return min(candidates)


def select_representatives(n: int, j_range: Iterable[int], budget: int = DEFAULT_POINT_BUDGET):
    """One lattice point per resonant shell, nearest the shell's mid-radius.

    Returns a list of ``(j, k_j)``; raises :class:`EmptyShellError` if a shell
    holds no lattice point.
    """
    out = []
    for j in j_range:
        lo, hi = resonant_interval(n, j)
        k = closest_point(n, 0.5 * (lo + hi), lo, hi, budget)
        if k is None:
            raise EmptyShellError(f"resonant shell j={j} (n={n}) holds no lattice point", j=j)
        out.append((j, k))
    return out


def density_ratio(n: int, j: int) -> float:
    """|trimmed annulus| / |annulus| for the shell [j pi, (j+1) pi]."""
    outer, inner = density_annuli(n, j)
    total = annulus_count(outer)
    if total == 0:
        raise ValueError(f"annulus j={j} has no lattice points")
    return annulus_count(inner) / total


def shell_counts(n: int, j_values: Iterable[int]) -> np.ndarray:
    """Lattice-point count of each resonant shell."""
    return np.array([annulus_count(resonant_shell(n, j)) for j in j_values], dtype=np.int64)


def write_shell_csv(path, rows) -> None:
    """rows: (j, count0, count1, ratio, k_j) tuples."""
    rows = list(rows)
    n = len(rows[0][4]) if rows else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j", "count_full", "count_trimmed", "ratio"] + [f"k_{i + 1}" for i in range(n)])
        for j, c0, c1, ratio, k in rows:
            w.writerow([j, c0, c1, repr(float(ratio))] + list(k))
