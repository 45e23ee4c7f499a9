"""Shared oracles for the test suite.

The oracles here are deliberately independent of the package: they use
mpmath at 40 digits or brute-force enumeration.
"""
import itertools
import math

import mpmath as mp
import numpy as np
import pytest


def bessel_series_oracle(delta, r, dps=40):
    """J_delta(r) by the ascending series in high precision."""
    with mp.workdps(dps):
        x = mp.mpf(r) / 2
        term = x**delta / mp.gamma(delta + 1)
        total = term
        k = 0
        while True:
            k += 1
            term *= -x * x / (k * (k + delta))
            total += term
            if abs(term) < mp.mpf(10) ** (-dps + 5) * max(abs(total), mp.mpf(10) ** -30):
                break
        return float(total)


def brute_annulus_count(n, lo, hi):
    """Count k in Z^n with lo <= |k| <= hi using exact integer squares."""
    lo2, hi2 = math.ceil(lo * lo), math.floor(hi * hi)
    b = math.isqrt(hi2)
    axis = range(-b, b + 1)
    return sum(1 for k in itertools.product(axis, repeat=n) if lo2 <= sum(v * v for v in k) <= hi2)


@pytest.fixture
def rng():
    return np.random.default_rng(20240601)


def pearson3_radial_law(N, r):
    """Density of |S_N| for the 3-D unit-step walk (exact piecewise polynomial).

    g(r) = r / (2^(N-1) (N-2)!) * sum_k (-1)^k C(N, k) (N - r - 2k)_+^(N-2),
    computed in exact rational arithmetic when r is rational.
    """
    from fractions import Fraction
    from math import comb, factorial

    r = Fraction(r)
    total = Fraction(0)
    for k in range(N + 1):
        x = N - r - 2 * k
        if x > 0:
            total += (-1) ** k * comb(N, k) * x ** (N - 2)
    return r * total / (2 ** (N - 1) * factorial(N - 2))


def brute_square_norms(n, bound):
    """Sorted |k|^2 over every k in Z^n with max |k_i| <= bound (full enumeration)."""
    axis = np.arange(-bound, bound + 1, dtype=np.int64) ** 2
    total = axis
    for _ in range(n - 1):
        total = (total[..., None] + axis).reshape(-1)
    return np.sort(total)


def count_from_norms(norms, lo, hi):
    lo2, hi2 = math.ceil(lo * lo), math.floor(hi * hi)
    return int(np.searchsorted(norms, hi2, side="right") - np.searchsorted(norms, lo2, side="left"))
