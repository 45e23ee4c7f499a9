"""Frequency-uniform decomposition and discrete modulation-space norms.

The window is a tensor product of the 1-D telescoping profile
``theta(t) = step(t + 1/2) - step(t - 1/2)``, which sums to one over the
integer translates exactly, equals 1 on ``|t| <= 1/2 - eps`` and vanishes
outside ``[-1/2 - eps, 1/2 + eps]``.
"""
from __future__ import annotations

import csv
import itertools
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np

from .grid import FREQUENCY, GridSpec, SampledField, local_patch, lp_norm, smooth_step, synth_block_bump

__all__ = [
    "IncompleteLatticeError",
    "ModulationNormParams",
    "PartitionSpec",
    "bessel_potential_apply",
    "block_norms",
    "block_project",
    "bracket",
    "embedding_ratios",
    "modulation_norm",
    "theta",
    "window_phi",
    "write_block_csv",
]


class IncompleteLatticeError(ValueError):
    def __init__(self, message, block=None):
        super().__init__(message)
        self.block = block


@dataclass(frozen=True)
class PartitionSpec:
    transition_width: float = 0.1
    dim: int = 2

    def __post_init__(self):
        if not 0 < self.transition_width < 0.25:
            raise ValueError("transition width must lie in (0, 0.25)")

    @property
    def flat_radius(self) -> float:
        """Half side of the cube on which phi_k is identically one."""
        return 0.5 - self.transition_width


def bracket(k) -> float:
    """Japanese bracket <k> = sqrt(1 + |k|^2)."""
    k = np.asarray(k, dtype=float)
    return float(np.sqrt(1.0 + np.sum(k * k)))


def theta(t, eps: float = 0.1):
    t = np.asarray(t, dtype=float)
    return smooth_step(t + 0.5, eps) - smooth_step(t - 0.5, eps)


def window_phi(spec: PartitionSpec, k, xi):
    """phi_k(xi) = prod_i theta(xi_i - k_i); ``xi`` has trailing axis of length n."""
    k = np.asarray(k, dtype=float)
    xi = np.asarray(xi, dtype=float)
    out = theta(xi[..., 0] - k[0], spec.transition_width)
    for i in range(1, k.size):
        out = out * theta(xi[..., i] - k[i], spec.transition_width)
    return out


def _window_on_grid(gspec: GridSpec, k, eps: float):
    axes = gspec.freq_axes()
    factors = [theta(ax - ki, eps) for ax, ki in zip(axes, k)]
    grids = np.meshgrid(*factors, indexing="ij", sparse=True)
    out = grids[0]
    for g in grids[1:]:
        out = out * g
    return out


def block_project(f: SampledField, k, partition: PartitionSpec | None = None) -> SampledField:
    """Apply the block operator F^-1 phi_k F; output keeps the input's domain tag."""
    partition = partition or PartitionSpec(dim=f.spec.dim)
    k = np.asarray(k, dtype=float).reshape(-1)
    if k.size != f.spec.dim:
        raise ValueError("block index dimension does not match the grid")
    fh = f.to_frequency()
    out = fh.with_values(fh.values * _window_on_grid(f.spec, k, partition.transition_width))
    return out if f.domain == FREQUENCY else out.to_space()


def bessel_potential_apply(f: SampledField, tau: float) -> SampledField:
    """Multiply the spectrum by (1 + |xi|^2)^(tau/2)."""
    fh = f.to_frequency()
    if tau == 0:
        return f
    weight = (1.0 + f.spec.freq_norm() ** 2) ** (0.5 * tau)
    out = fh.with_values(fh.values * weight)
    return out if f.domain == FREQUENCY else out.to_space()


@dataclass(frozen=True)
class ModulationNormParams:
    p: float = 2.0
    q: float = 2.0
    s: float = 0.0
    lattice_range: tuple | None = None
    partition: PartitionSpec = field(default_factory=PartitionSpec)

    def __post_init__(self):
        if not (self.p >= 1 and self.q >= 1):
            raise ValueError("p and q must lie in [1, inf]")


def _candidate_blocks(gspec: GridSpec, eps: float) -> list:
    reach = 0.5 + eps
    ranges = []
    for ax in gspec.freq_axes():
        lo = int(np.ceil(ax.min() - reach))
        hi = int(np.floor(ax.max() + reach))
        ranges.append(range(lo, hi + 1))
    return [tuple(k) for k in itertools.product(*ranges)]


def _block_energies(fh: SampledField, blocks: Sequence, eps: float) -> np.ndarray:
    """sum |phi_k f_hat|^2 for every block, by separable contractions."""
    power = np.abs(fh.values) ** 2
    axes = fh.spec.freq_axes()
    per_axis = []
    for i, ax in enumerate(axes):
        ks = sorted({k[i] for k in blocks})
        tab = {kv: theta(ax - kv, eps) ** 2 for kv in ks}
        per_axis.append(tab)
    out = np.empty(len(blocks))
    cache = {}
    for idx, k in enumerate(blocks):
        # contract the last n-1 axes once per prefix
        head, tail = k[0], k[1:]
        if tail not in cache:
            t = power
            for i in range(len(tail), 0, -1):
                t = t @ per_axis[i][tail[i - 1]]
            cache[tail] = t
        out[idx] = cache[tail] @ per_axis[0][head]
    return out


def block_norms(f: SampledField, blocks: Iterable, p: float, partition: PartitionSpec | None = None):
    """``{k: ||box_k f||_p}`` for the requested blocks."""
    partition = partition or PartitionSpec(dim=f.spec.dim)
    fh = f.to_frequency()
    return {tuple(k): lp_norm(block_project(fh, k, partition), p) for k in blocks}


def _active_blocks(fh: SampledField, partition: PartitionSpec, rel: float = 1e-14):
    cands = _candidate_blocks(fh.spec, partition.transition_width)
    energy = np.sqrt(_block_energies(fh, cands, partition.transition_width))
    if energy.max() == 0:
        return [], cands, energy
    keep = energy > rel * energy.max()
    return [c for c, k in zip(cands, keep) if k], cands, energy


def _combine(weighted: np.ndarray, q: float) -> float:
    if weighted.size == 0:
        return 0.0
    if np.isinf(q):
        return float(weighted.max())
    m = weighted.max()
    if m == 0:
        return 0.0
    return float(m * np.sum((weighted / m) ** q) ** (1.0 / q))


def modulation_norm(f: SampledField, params: ModulationNormParams, *, return_blocks=False):
    """Discrete M^s_{p,q} norm (sum_k <k>^{sq} ||box_k f||_p^q)^{1/q}.

    Without an explicit ``lattice_range`` the active blocks are found from
    the spectrum (blocks whose L^2 mass exceeds 1e-14 of the largest).  With
    one, any block outside it carrying more than that share raises
    :class:`IncompleteLatticeError`.
    """
    part = params.partition
    if part.dim != f.spec.dim:
        part = PartitionSpec(part.transition_width, f.spec.dim)
    fh = f.to_frequency()
    active, cands, energy = _active_blocks(fh, part)
    if params.lattice_range is None:
        blocks = active
    else:
        blocks = [tuple(int(v) for v in k) for k in params.lattice_range]
        chosen = set(blocks)
        missing = [k for k in active if k not in chosen]
        if missing:
            worst = max(missing, key=lambda k: energy[cands.index(k)])
            raise IncompleteLatticeError(
                f"lattice range misses active block {worst}", block=worst
            )
    norms = block_norms(fh, blocks, params.p, part)
    rows = [(k, norms[k], bracket(k) ** params.s) for k in blocks]
    weighted = np.array([w * v for _, v, w in rows])
    value = _combine(weighted, params.q)
    if return_blocks:
        return value, rows
    return value


def embedding_ratios(n: int, source: ModulationNormParams, target: ModulationNormParams,
                     blocks: Iterable, lams: Sequence[float], points: int = 64):
    """||f||_target / ||f||_source over single-block functions f_{k,lam}.

    Each f lives on a local patch around k, and both norms go through
    :func:`modulation_norm`.  Returns rows ``(k, lam, ratio)``.
    """
    rows = []
    for k in blocks:
        k = tuple(int(v) for v in k)
        if len(k) != n:
            raise ValueError("block index has wrong dimension")
        for lam in lams:
            patch = local_patch(k, 2.0 * lam, points)
            f = synth_block_bump(patch, k, lam)
            rows.append((k, float(lam), modulation_norm(f, target) / modulation_norm(f, source)))
    return rows


def write_block_csv(path, rows, s: float | None = None) -> None:
    """Per-block rows: k_1..k_n, |k|, block L^p norm, <k>^s weight."""
    rows = list(rows)
    n = len(rows[0][0]) if rows else 0
    with open(path, "w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow([f"k_{i + 1}" for i in range(n)] + ["abs_k", "block_norm", "weight"])
        for k, norm, weight in rows:
            w.writerow(list(k) + [repr(float(np.linalg.norm(k))), repr(norm), repr(weight)])
