"""Bessel functions J_delta, the kernel V_delta(r) = J_delta(r) / r**delta,
and the leading term of the large-argument expansion.

All functions accept scalars or numpy arrays and broadcast over ``r``.
Small arguments go through the ascending power series; larger ones use
``scipy.special.jv``.  The two branches overlap on ``[SERIES_RADIUS / 2,
SERIES_RADIUS]`` and are cross-checked there by the test suite.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import special

__all__ = [
    "BesselDomainError",
    "BesselOrder",
    "SERIES_RADIUS",
    "asymptotic_main",
    "bessel_j",
    "bessel_j_series",
    "remainder_decay_exponent",
    "v_derivative",
    "v_kernel",
    "v_kernel_series",
]

# Above this radius the alternating series loses more than ~1e-13 to
# cancellation in double precision.
SERIES_RADIUS = 6.0
_V_SERIES_RADIUS = 0.5
_MAX_TERMS = 200


class BesselDomainError(ValueError):
    """Raised for orders below -1/2 or negative arguments."""


@dataclass(frozen=True)
class BesselOrder:
    delta: float

    def __post_init__(self):
        if not np.isfinite(self.delta) or self.delta < -0.5:
            raise BesselDomainError(f"Bessel order must be >= -1/2, got {self.delta}")

    def __float__(self):
        return float(self.delta)


@dataclass(frozen=True)
class AsymptoticExpansion:
    """Leading-order data of the large-r expansion at a given point.

    Only the main term is computed; ``remainder_bound`` is the observed
    ``|J - main|`` at ``r`` and the correction coefficients are left empty.
    """

    order: int
    main_term: float
    correction_terms: tuple = ()
    remainder_bound: float = 0.0


def _order(delta) -> float:
    return float(BesselOrder(float(delta)).delta)


def _radius(r) -> np.ndarray:
    r = np.asarray(r, dtype=float)
    if np.any(r < 0) or np.any(np.isnan(r)):
        raise BesselDomainError("Bessel argument must be a nonnegative real")
    return r


def _scalar_or_array(out: np.ndarray, like):
    if np.ndim(like) == 0:
        return float(out)
    return out


def _check_finite(out: np.ndarray, delta: float) -> np.ndarray:
    if not np.all(np.isfinite(out)):
        raise OverflowError(f"non-finite Bessel value for order {delta}")
    return out


def v_kernel_series(delta, r):
    """V_delta(r) by its ascending series; accurate for r up to a few units."""
    delta = _order(delta)
    r = _radius(r)
    x = -(0.5 * r) ** 2
    term = np.full_like(r, 1.0 / (2.0**delta * special.gamma(delta + 1.0)))
    total = term.copy()
    for k in range(1, _MAX_TERMS):
        term = term * x / (k * (k + delta))
        total = total + term
        if np.all(np.abs(term) <= 1e-17 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def bessel_j_series(delta, r):
    """J_delta(r) from the ascending series (no branch switching)."""
    delta = _order(delta)
    r = _radius(r)
    with np.errstate(divide="ignore"):
        scale = r**delta
    return _check_finite(scale * v_kernel_series(delta, r), delta)


def bessel_j(delta, r):
    """Bessel function of the first kind J_delta(r) for real r >= 0.

    Raises
    ------
    BesselDomainError
        If ``delta < -1/2`` or ``r < 0``.
    OverflowError
        If the value is not finite (e.g. ``delta = -1/2`` at ``r = 0``).
    """
    delta = _order(delta)
    rr = _radius(r)
    flat = np.atleast_1d(rr)
    out = np.empty_like(flat)
    small = flat <= SERIES_RADIUS
    if np.any(small):
        with np.errstate(divide="ignore", invalid="ignore"):
            out[small] = flat[small] ** delta * v_kernel_series(delta, flat[small])
    if np.any(~small):
        out[~small] = special.jv(delta, flat[~small])
    out = _check_finite(out.reshape(rr.shape), delta)
    return _scalar_or_array(out, r)


def v_kernel(delta, r):
    """V_delta(r) = J_delta(r) / r**delta, continuous at r = 0.

    Near the origin the series of V itself is summed, so there is no 0/0.
    """
    delta = _order(delta)
    rr = _radius(r)
    flat = np.atleast_1d(rr)
    out = np.empty_like(flat)
    near = flat < _V_SERIES_RADIUS
    if np.any(near):
        out[near] = v_kernel_series(delta, flat[near])
    if np.any(~near):
        far = flat[~near]
        out[~near] = np.asarray(bessel_j(delta, far)) / far**delta
    out = _check_finite(out.reshape(rr.shape), delta)
    return _scalar_or_array(out, r)


def v_derivative(delta, r):
    """d/dr V_delta(r), using the recurrence V'_delta(r) = -r V_{delta+1}(r)."""
    delta = _order(delta)
    rr = _radius(r)
    out = -rr * np.asarray(v_kernel(delta + 1.0, rr))
    return _scalar_or_array(out, r)


def asymptotic_main(delta, r):
    """Leading oscillatory term sqrt(2/(pi r)) cos(r - delta pi/2 - pi/4), r > 1."""
    delta = _order(delta)
    rr = np.asarray(r, dtype=float)
    if np.any(~(rr > 1.0)):
        raise BesselDomainError("asymptotic_main requires r > 1")
    out = np.sqrt(2.0 / (np.pi * rr)) * np.cos(rr - 0.5 * delta * np.pi - 0.25 * np.pi)
    return _scalar_or_array(out, r)


def asymptotic_expansion(delta, r) -> AsymptoticExpansion:
    main = asymptotic_main(delta, r)
    return AsymptoticExpansion(
        order=1, main_term=float(main), remainder_bound=abs(float(bessel_j(delta, r)) - main)
    )


def remainder_decay_exponent(delta, r_lo=50.0, r_hi=5000.0, windows=40, per_window=400):
    """Fit the decay exponent of |J_delta(r) - main(r)| over [r_lo, r_hi].

    The remainder oscillates, so the fit uses its maximum over each of
    ``windows`` log-spaced windows (each at least one period long).

    Returns
    -------
    slope, intercept : float
        Least-squares line ``log max|E| = slope * log r + intercept``.
    """
    edges = np.geomspace(r_lo, r_hi, windows + 1)
    centers, peaks = [], []
    for a, b in zip(edges[:-1], edges[1:]):
        b = max(b, a + 2 * np.pi)
        r = np.linspace(a, b, per_window)
        err = np.abs(np.asarray(bessel_j(delta, r)) - asymptotic_main(delta, r))
        i = int(np.argmax(err))
        centers.append(r[i])
        peaks.append(err[i])
    slope, intercept = np.polyfit(np.log(centers), np.log(peaks), 1)
    return float(slope), float(intercept)
