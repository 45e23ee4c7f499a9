import csv
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from modsphere.decomposition import ModulationNormParams, bracket, modulation_norm
from modsphere.extremal import (
    BlockProfile,
    ThresholdParams,
    Verdict,
    block_diagonal_norms,
    classify,
    critical_exponent,
    critical_weights,
    k_sweep,
    lambda_sweep,
    shell_profiles,
    single_block_ratio,
    threshold_experiment,
    write_profile_csv,
    write_threshold_csv,
)
from modsphere.grid import GridSpec
from modsphere.grid import synth_block_bump
from modsphere.lattice import RHO
from modsphere.multipliers import apply_multiplier, laplace_iterated_symbol, sigma

P_VALUES = st.sampled_from([1.0, 1.5, 2.0, 4.0, math.inf])


def test_classify_examples():
    assert classify(ThresholdParams(3, 2)) is Verdict.BOUNDED
    assert classify(ThresholdParams(2, 1)) is Verdict.UNBOUNDED
    # q1 = 2 > q2 = 1 with s1 + n/q1 == s2 + sigma + n/q2 exactly: unbounded
    n, N = 2, 2
    s1 = sigma(n, N) + n / 1 - n / 2
    assert classify(ThresholdParams(n, N, q1=2, q2=1, s1=s1, s2=0)) is Verdict.UNBOUNDED
    assert classify(ThresholdParams(n, N, q1=2, q2=1, s1=s1 + 1e-6, s2=0)) is Verdict.BOUNDED
    assert classify(ThresholdParams(3, 2, p1=4, p2=2)) is Verdict.UNBOUNDED


def test_params_validation():
    with pytest.raises(ValueError):
        ThresholdParams(2, 2, p1=0.5)
    with pytest.raises(ValueError):
        ThresholdParams(1, 2)


@settings(max_examples=200, deadline=None)
@given(st.integers(2, 4), st.integers(0, 6), P_VALUES, P_VALUES, P_VALUES, P_VALUES,
       st.floats(-5, 5), st.floats(-5, 5), st.floats(-3, 3))
def test_classify_shift_invariant(n, N, p1, p2, q1, q2, s1, s2, t):
    a = ThresholdParams(n, N, p1, p2, q1, q2, s1, s2)
    b = ThresholdParams(n, N, p1, p2, q1, q2, s1 + t, s2 + t)
    # skip draws that sit within rounding of a boundary after the shift
    margin = abs((s1 - s2) - sigma(n, N)) if q1 <= q2 else abs(
        (s1 + (n / q1 if math.isfinite(q1) else 0)) - (s2 + sigma(n, N) + (n / q2 if math.isfinite(q2) else 0)))
    if margin > 1e-9:
        assert classify(a) is classify(b)


def test_block_profile_validation():
    with pytest.raises(ValueError):
        BlockProfile((1, 0), 0.0, 1.0, 1.0)


def test_lambda_range():
    P = ThresholdParams(2, 2)
    with pytest.raises(ValueError):
        single_block_ratio(P, (30, 0), 2 * RHO)
    with pytest.raises(ValueError):
        single_block_ratio(P, (30, 0), 0.0)


@pytest.mark.parametrize("p1, p2", [(1.0, 2.0), (2.0, 1.0), (2.0, 4.0), (1.0, math.inf)])
def test_lambda_sweep_slope(p1, p2):
    P = ThresholdParams(2, 2, p1=p1, p2=p2)
    _, ratios, slope = lambda_sweep(P, (33, 11))
    expected = 2 * (1 / p1 - (0 if math.isinf(p2) else 1 / p2))
    assert slope == pytest.approx(expected, abs=0.05)
    # divergence as lambda -> 0 exactly when p1 > p2
    assert (ratios[0] > ratios[-1]) == (p1 > p2)


@pytest.mark.parametrize("n, N, s1, s2", [(2, 2, 0.0, 0.0), (2, 1, 0.5, 0.0), (3, 2, -1.0, 0.0), (2, 4, 0.0, 1.0)])
def test_k_sweep_slope(n, N, s1, s2):
    P = ThresholdParams(n, N, s1=s1, s2=s2)
    _, _, slope = k_sweep(P, range(10, 91, 8))
    assert slope == pytest.approx(s2 + sigma(n, N) - s1, abs=0.15)


def test_balanced_single_block_ratio_two_sided():
    n, N = 2, 2
    P = ThresholdParams(n, N, s1=sigma(n, N), s2=0.0)
    _, ratios, _ = k_sweep(P, range(10, 91, 4))
    assert ratios.max() / ratios.min() <= 20


def test_critical_weights_equalize_exponents():
    P = ThresholdParams(2, 4, q1=2, q2=1, s1=1.0, s2=0.0)  # sigma = 0
    assert P.sigma == 0.0
    assert critical_exponent(P) == pytest.approx(-2.0)
    ks = [(3, 4), (10, 0), (20, 21)]
    w = critical_weights(P, ks)
    assert w == pytest.approx([bracket(k) ** -2 for k in ks])
    # numerator and denominator terms carry the same power of <k>
    e = critical_exponent(P)
    assert (e + P.s2 + P.sigma) * P.q2 == pytest.approx((e + P.s1) * P.q1)


@settings(max_examples=100, deadline=None)
@given(st.floats(-3, 3), st.floats(-3, 3), st.sampled_from([(2.0, 1.0), (3.0, 1.5), (1.0, 4.0)]))
def test_critical_exponent_common_power(s1, s2, qs):
    q1, q2 = qs
    P = ThresholdParams(2, 2, q1=q1, q2=q2, s1=s1, s2=s2)
    e = critical_exponent(P)
    common = (s1 - s2 - P.sigma) * q1 * q2 / (q2 - q1)
    assert (e + s2 + P.sigma) * q2 == pytest.approx(common, abs=1e-9)
    assert (e + s1) * q1 == pytest.approx(common, abs=1e-9)


def test_critical_exponent_degenerate_line():
    P = ThresholdParams(2, 2, q1=3, q2=1, s1=sigma(2, 2) + 0.25, s2=0.25)
    assert critical_exponent(P) == pytest.approx(-(P.s2 + P.sigma))


def test_critical_weights_errors():
    with pytest.raises(ValueError):
        critical_weights(ThresholdParams(2, 2, q1=2, q2=2), [(1, 0)])
    with pytest.raises(ValueError):
        critical_weights(ThresholdParams(2, 2, q1=math.inf, q2=2), [(1, 0)])


def test_weights_positive_and_monotone():
    P = ThresholdParams(2, 2, q1=1, q2=2, s1=3.0, s2=0.0)
    assert critical_exponent(P) > 0
    ks = [(k, 0) for k in range(1, 50, 7)]
    w = critical_weights(P, ks)
    assert all(x > 0 for x in w) and w == sorted(w)


@pytest.fixture(scope="module")
def profiles_n2():
    P = ThresholdParams(2, 2, q1=2, q2=1)
    js = [j for j in range(9, 330) if resonant_ok(j)]
    return shell_profiles(P, js)


def resonant_ok(j):
    from modsphere.lattice import resonant_interval

    lo, hi = resonant_interval(2, j)
    return lo > 30 and hi < 1024


def test_threshold_critical_line_grows(profiles_n2):
    n, N = 2, 2
    s1 = sigma(n, N) + n / 1 - n / 2
    P = ThresholdParams(n, N, q1=2, q2=1, s1=s1, s2=0.0)
    assert classify(P) is Verdict.UNBOUNDED
    rows, _ = threshold_experiment(P, [128, 256, 512, 1024], profiles=profiles_n2)
    R = [r for _, r in rows]
    assert all(b > a for a, b in zip(R, R[1:]))
    assert R[-1] / R[1] > 1.2


def test_threshold_interior_plateau(profiles_n2):
    n, N = 2, 2
    s1 = sigma(n, N) + n / 1 - n / 2 + 0.6
    P = ThresholdParams(n, N, q1=2, q2=1, s1=s1, s2=0.0)
    assert classify(P) is Verdict.BOUNDED
    rows, _ = threshold_experiment(P, [102.4, 256, 512, 1024], profiles=profiles_n2)
    R = np.array([r for _, r in rows])
    steps = np.diff(R)
    assert np.all(steps >= 0)
    # increments shrink geometrically: the partial ratios converge
    assert np.all(steps[1:] < 0.5 * steps[:-1])
    assert R[-1] / R[1] - 1 <= 0.05


def test_threshold_unit_weight_control(profiles_n2):
    P = ThresholdParams(2, 2, q1=1, q2=2, s1=sigma(2, 2), s2=0.0)
    with pytest.raises(ValueError):
        threshold_experiment(P, [256], profiles=profiles_n2)
    rows, _ = threshold_experiment(P, [128, 512, 1024], weights="unit", profiles=profiles_n2)
    R = np.array([r for _, r in rows])
    # adding blocks feeds the l^1 denominator faster than the l^2 numerator
    assert np.all(np.diff(R) <= 0) and R.max() < 1.0


def test_block_diagonal_matches_full_grid():
    grid = GridSpec(2, 32.0, 1024)
    blocks = [(12, 5), (-20, 7), (33, -22)]
    coeffs = [1.0, 0.5, 2.0]
    lam = 0.7
    F = None
    for k, c in zip(blocks, coeffs):
        f = synth_block_bump(grid, k, lam) * c
        F = f if F is None else F + f
    m = laplace_iterated_symbol(2, 2)
    for p1, p2, q1, q2 in [(2, 2, 2, 1), (4, 2, 1, 3), (2, 4, 2, 2)]:
        P = ThresholdParams(2, 2, p1=p1, p2=p2, q1=q1, q2=q2, s1=0.5, s2=-0.3)
        num, den = block_diagonal_norms(P, blocks, coeffs, lam, grid=grid)
        full_num = modulation_norm(apply_multiplier(F, m), ModulationNormParams(p2, q2, P.s2))
        full_den = modulation_norm(F, ModulationNormParams(p1, q1, P.s1))
        assert num == pytest.approx(full_num, rel=1e-6)
        assert den == pytest.approx(full_den, rel=1e-6)


def test_block_diagonal_rejects_neighbours():
    with pytest.raises(ValueError):
        block_diagonal_norms(ThresholdParams(2, 2), [(3, 3), (4, 3)], [1, 1], RHO)


def test_csv_writers(tmp_path, profiles_n2):
    rows = [(256.0, 1.5), (512.0, 1.75)]
    path = tmp_path / "t.csv"
    write_threshold_csv(path, rows)
    assert path.read_text().splitlines()[0] == "M,ratio"
    path = tmp_path / "p.csv"
    write_profile_csv(path, profiles_n2[:3], [1.0, 2.0, 3.0])
    with open(path, newline="") as fh:
        data = list(csv.reader(fh))
    assert data[0] == ["j", "k_1", "k_2", "count", "gain", "a_j"]
    assert len(data) == 4
