"""Sharpness experiments for Delta (A_1)^N between modulation spaces.

Everything here is block-diagonal: the test functions ``f_{k,lam}`` have
spectra inside the flat part of a single window, so the block operators act
on them as the identity (own block) or zero (all others).  Modulation norms of
sums of such functions are weighted l^q sums of per-block scalars, and no
grid wider than one block is ever built.
"""
from __future__ import annotations

import csv
import enum
import math
from dataclasses import asdict, dataclass
from typing import Iterable, Sequence

import numpy as np

from .decomposition import PartitionSpec, bracket
from .grid import GridSpec, lp_norm
from .lattice import RHO, annulus_count, resonant_interval, resonant_shell, select_representatives
from .multipliers import block_pair, laplace_iterated_symbol, sigma

__all__ = [
    "BlockProfile",
    "ShellProfile",
    "ThresholdParams",
    "Verdict",
    "block_diagonal_norms",
    "block_profile",
    "classify",
    "critical_exponent",
    "critical_weights",
    "fit_slope",
    "k_sweep",
    "lambda_sweep",
    "shell_profiles",
    "single_block_ratio",
    "threshold_experiment",
]

_EQ_TOL = 1e-12


class Verdict(str, enum.Enum):
    BOUNDED = "BOUNDED"
    UNBOUNDED = "UNBOUNDED"


@dataclass(frozen=True)
class ThresholdParams:
    n: int
    N: int
    p1: float = 2.0
    p2: float = 2.0
    q1: float = 2.0
    q2: float = 2.0
    s1: float = 0.0
    s2: float = 0.0

    def __post_init__(self):
        for name in ("p1", "p2", "q1", "q2"):
            v = getattr(self, name)
            if not (v >= 1.0):
                raise ValueError(f"{name} must lie in [1, inf], got {v}")
        if self.n < 2 or self.N < 0:
            raise ValueError("need n >= 2 and N >= 0")

    @property
    def sigma(self) -> float:
        return sigma(self.n, self.N)

    def as_dict(self) -> dict:
        return asdict(self)


def _inv(q: float) -> float:
    return 0.0 if math.isinf(q) else 1.0 / q


def classify(params: ThresholdParams) -> Verdict:
    """Boundedness verdict from the exponent conditions.

    Equality on the ``q1 > q2`` line counts as unbounded; equalities are
    resolved with an absolute tolerance of 1e-12.
    """
    P = params
    if P.p1 > P.p2:
        return Verdict.UNBOUNDED
    if P.q1 <= P.q2:
        ok = P.s1 >= P.s2 + P.sigma - _EQ_TOL
    else:
        lhs = P.s1 + P.n * _inv(P.q1)
        rhs = P.s2 + P.sigma + P.n * _inv(P.q2)
        ok = lhs > rhs + _EQ_TOL
    return Verdict.BOUNDED if ok else Verdict.UNBOUNDED


@dataclass(frozen=True)
class BlockProfile:
    k: tuple
    gain: float
    lp1_norm: float
    lp2_norm: float

    def __post_init__(self):
        if not (self.gain > 0 and self.lp1_norm > 0 and self.lp2_norm > 0):
            raise ValueError(f"degenerate block profile at k={self.k}")


def block_profile(params: ThresholdParams, k, lam: float = RHO, points: int | None = None,
                  patch: GridSpec | None = None) -> BlockProfile:
    """Per-block scalars of f_{k,lam}: gain in L^{p2} and the two L^p norms."""
    f, g = block_pair(laplace_iterated_symbol(params.n, params.N), k, lam, points, patch=patch)
    n2 = lp_norm(f, params.p2)
    return BlockProfile(tuple(int(v) for v in k), lp_norm(g, params.p2) / n2,
                        lp_norm(f, params.p1), n2)


def _check_lambda(lam: float) -> None:
    if not 0 < lam <= RHO * (1 + 1e-12):
        raise ValueError(f"lambda must lie in (0, rho={RHO:.6g}], got {lam}")


def single_block_ratio(params: ThresholdParams, k, lam: float = RHO, points: int | None = None) -> float:
    """||Delta(A_1)^N f_{k,lam}||_{M^{s2}_{p2,q2}} / ||f_{k,lam}||_{M^{s1}_{p1,q1}}.

    Both norms collapse onto the single block k.
    """
    _check_lambda(lam)
    prof = block_profile(params, k, lam, points)
    w = bracket(k)
    return (w**params.s2 * prof.gain * prof.lp2_norm) / (w**params.s1 * prof.lp1_norm)


def fit_slope(x, y) -> float:
    return float(np.polyfit(np.log(np.asarray(x, float)), np.log(np.asarray(y, float)), 1)[0])


def lambda_sweep(params: ThresholdParams, k, lams: Sequence[float] | None = None, points=None):
    """Ratios over a lambda sweep at fixed k; returns (lams, ratios, fitted slope)."""
    if lams is None:
        lams = RHO * np.geomspace(1.0 / 16.0, 1.0, 9)
    lams = np.asarray(lams, dtype=float)
    ratios = np.array([single_block_ratio(params, k, lam, points) for lam in lams])
    return lams, ratios, fit_slope(lams, ratios)


def k_sweep(params: ThresholdParams, j_range: Iterable[int], lam: float = RHO, points=None):
    """Ratios over resonant representatives; returns (brackets, ratios, fitted slope)."""
    reps = select_representatives(params.n, j_range)
    br = np.array([bracket(k) for _, k in reps])
    ratios = np.array([single_block_ratio(params, k, lam, points) for _, k in reps])
    return br, ratios, fit_slope(br, ratios)


def critical_exponent(params: ThresholdParams) -> float:
    P = params
    if math.isinf(P.q1) or math.isinf(P.q2):
        raise ValueError("critical weights need finite q1 and q2")
    if P.q1 == P.q2:
        raise ValueError("critical weights are undefined for q1 == q2")
    # equalizes the exponents of the two l^q series; both become
    # (s1 - s2 - sigma) q1 q2 / (q2 - q1)
    return (P.s1 * P.q1 - (P.s2 + P.sigma) * P.q2) / (P.q2 - P.q1)


def critical_weights(params: ThresholdParams, shells: Sequence) -> list:
    """a_j = <k_j>^((s1 q1 - (s2 + sigma) q2) / (q2 - q1)) for each k_j.

    With these weights the numerator and denominator series of the
    threshold experiment carry the same power of <k_j>.
    """
    e = critical_exponent(params)
    return [bracket(k) ** e for k in shells]


@dataclass(frozen=True)
class ShellProfile:
    j: int
    k: tuple
    count: int
    bracket: float
    gain: float


def shell_profiles(params: ThresholdParams, j_values: Iterable[int], lam: float = RHO,
                   points: int | None = 32) -> list:
    """Representative, lattice count and measured gain of each resonant shell."""
    sym = laplace_iterated_symbol(params.n, params.N)
    out = []
    for j, k in select_representatives(params.n, j_values):
        f, g = block_pair(sym, k, lam, points)
        gain = lp_norm(g, params.p2) / lp_norm(f, params.p2)
        out.append(ShellProfile(j, k, annulus_count(resonant_shell(params.n, j)), bracket(k), gain))
    return out


def _lq_log(log_terms: np.ndarray, log_mult: np.ndarray, q: float) -> np.ndarray:
    """Running log of (sum_i mult_i * term_i^q)^(1/q), or running max for q = inf."""
    if math.isinf(q):
        return np.maximum.accumulate(log_terms)
    return np.logaddexp.accumulate(q * log_terms + log_mult) / q


def threshold_experiment(params: ThresholdParams, M_sweep: Sequence[float], *, r_start: float = 30.0,
                         lam: float = RHO, weights: str = "critical", points: int | None = 32,
                         profiles: list | None = None):
    """R(M) = ||Delta(A_1)^N F_M||_{M^{s2}_{p2,q2}} / ||F_M||_{M^{s1}_{p1,q1}} for each M.

    ``F_M`` places ``a_j f_{k,lam}`` on every lattice point of the resonant
    shells with ``r_start < |k| < M``.  A shell's points share the scalars of
    its representative (bracket and measured gain) and enter the l^q sums
    with their lattice-point multiplicity.

    ``weights='critical'`` uses the critical weights (requires finite
    ``q1 > q2``); ``weights='unit'`` sets every a_j = 1.

    Returns a list of ``(M, R(M))`` and the shell profiles used.
    """
    P = params
    if weights == "critical":
        if not P.q1 > P.q2:
            raise ValueError("critical-weight threshold runs need q1 > q2")
        e = critical_exponent(P)
    elif weights == "unit":
        e = 0.0
    else:
        raise ValueError(f"unknown weight scheme {weights!r}")
    _check_lambda(lam)
    M_sweep = sorted(float(m) for m in M_sweep)
    if profiles is None:
        j_lo = max(1, int(math.floor(r_start / math.pi)) - 1)
        j_hi = int(math.ceil(M_sweep[-1] / math.pi)) + 1
        js = [j for j in range(j_lo, j_hi + 1)
              if resonant_interval(P.n, j)[0] > r_start and resonant_interval(P.n, j)[1] < M_sweep[-1]]
        profiles = shell_profiles(P, js, lam, points)
    if not profiles:
        raise ValueError("no resonant shell between r_start and max(M)")
    f, _ = block_pair(laplace_iterated_symbol(P.n, P.N), profiles[0].k, lam, points)
    lognorm1, lognorm2 = math.log(lp_norm(f, P.p1)), math.log(lp_norm(f, P.p2))
    lb = np.log([s.bracket for s in profiles])
    lg = np.log([s.gain for s in profiles])
    lc = np.log([s.count for s in profiles])
    num = _lq_log(e * lb + P.s2 * lb + lg + lognorm2, lc, P.q2)
    den = _lq_log(e * lb + P.s1 * lb + lognorm1, lc, P.q1)
    his = np.array([resonant_interval(P.n, s.j)[1] for s in profiles])
    out = []
    for M in M_sweep:
        idx = int(np.searchsorted(his, M, side="left")) - 1
        if idx < 0:
            out.append((M, float("nan")))
        else:
            out.append((M, float(np.exp(num[idx] - den[idx]))))
    return out, profiles


def block_diagonal_norms(params: ThresholdParams, blocks: Sequence, coeffs: Sequence[float],
                         lam: float, grid: GridSpec | None = None, points: int | None = None):
    """Both modulation norms of F = sum_j c_j f_{k_j,lam} from per-block scalars.

    With ``grid`` given, every block is evaluated on a patch that reuses the
    grid's frequency lattice and period, so the result is directly comparable
    with a full-grid computation on that grid.

    Returns ``(||Delta(A_1)^N F||_{M^{s2}_{p2,q2}}, ||F||_{M^{s1}_{p1,q1}})``.
    """
    P = params
    ks = [tuple(int(v) for v in k) for k in blocks]
    for a in range(len(ks)):
        for b in range(a + 1, len(ks)):
            if max(abs(x - y) for x, y in zip(ks[a], ks[b])) < 2:
                raise ValueError("blocks must be at sup-distance >= 2 to stay disjoint")
    num_terms, den_terms = [], []
    for k, c in zip(ks, coeffs):
        patch = None
        if grid is not None:
            dxi = grid.freq_spacing
            size = max(16, 1 << int(math.ceil(math.log2(4.0 * lam / dxi + 8))))
            center = tuple(round(v / dxi) * dxi for v in k)
            patch = GridSpec(grid.dim, grid.half_period, size, center)
        prof = block_profile(P, k, lam, points, patch=patch)
        w = bracket(k)
        num_terms.append(abs(c) * w**P.s2 * prof.gain * prof.lp2_norm)
        den_terms.append(abs(c) * w**P.s1 * prof.lp1_norm)

    def lq(v, q):
        v = np.asarray(v)
        return float(v.max()) if math.isinf(q) else float(np.sum(v**q) ** (1.0 / q))

    return lq(num_terms, P.q2), lq(den_terms, P.q1)


def write_threshold_csv(path, rows) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["M", "ratio"])
        for M, R in rows:
            w.writerow([repr(float(M)), repr(float(R))])


def write_profile_csv(path, profiles, weights) -> None:
    n = len(profiles[0].k) if profiles else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["j"] + [f"k_{i + 1}" for i in range(n)] + ["count", "gain", "a_j"])
        for s, a in zip(profiles, weights):
            w.writerow([s.j] + list(s.k) + [s.count, repr(s.gain), repr(float(a))])
