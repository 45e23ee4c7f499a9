import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import pearson3_radial_law
from modsphere.random_walk import (
    MCResult,
    WalkSpec,
    char_value,
    density_radial,
    density_radial_raw,
    mc_walk,
    radial_cdf,
    sphere_area,
    total_mass,
    write_walk_csv,
)


def radial_density_oracle(N, r):
    # p_N(r) on R^3 from the law of |S_N|
    return float(pearson3_radial_law(N, r)) / (4 * math.pi * r * r)


def test_sphere_area():
    assert sphere_area(2) == pytest.approx(2 * math.pi)
    assert sphere_area(3) == pytest.approx(4 * math.pi)


def test_oracle_normalised():
    from scipy.integrate import quad

    for N in (2, 3, 4, 6):
        mass = quad(lambda x: float(pearson3_radial_law(N, x)), 0, N, points=list(range(1, N)))[0]
        assert mass == pytest.approx(1.0, abs=1e-10)


def test_char_value_basics():
    for n in (2, 3, 4):
        assert char_value(n, 3, 0.0) == pytest.approx(1.0)
    # sin t / t in three dimensions
    assert char_value(3, 1, math.pi) == pytest.approx(0.0, abs=1e-14)
    t = np.linspace(0.0, 50.0, 501)
    assert char_value(3, 2, t) == pytest.approx((np.sinc(t / math.pi)) ** 2, abs=1e-13)
    with pytest.raises(ValueError):
        char_value(3, 2, -1.0)


@settings(max_examples=50, deadline=None)
@given(st.integers(2, 5), st.integers(1, 8), st.floats(0, 500))
def test_char_value_bounded(n, N, t):
    assert abs(char_value(n, N, t)) <= 1.0 + 1e-12


@pytest.mark.parametrize("n, N", [(2, 3), (3, 2), (3, 4), (4, 2)])
def test_char_value_envelope_exponent(n, N):
    t = np.geomspace(10, 1e4, 4000)
    # upper envelope via running maxima on log-spaced windows
    v = np.abs(char_value(n, N, t))
    blocks = np.array_split(np.arange(t.size), 40)
    tm = np.array([t[b[np.argmax(v[b])]] for b in blocks])
    vm = np.array([v[b].max() for b in blocks])
    slope = np.polyfit(np.log(tm), np.log(vm), 1)[0]
    assert slope == pytest.approx(-(n - 1) * N / 2, abs=0.1)


@pytest.mark.parametrize("r", [0.1, 0.25, 0.5, 1.0, 1.5, 1.9])
def test_density_two_steps_3d(r):
    spec = WalkSpec(3, 2)
    assert density_radial(spec, r) == pytest.approx(1 / (8 * math.pi * r), abs=1e-6)


@pytest.mark.parametrize("N", [3, 4, 6])
@pytest.mark.parametrize("r", [0.3, 0.8, 1.7, 2.4])
def test_density_matches_exact_law(N, r):
    spec = WalkSpec(3, N)
    assert density_radial(spec, r) == pytest.approx(radial_density_oracle(N, r), abs=1e-6)


def test_density_frozen_values():
    # exact rational values of the 3-D law: p_3(1) = 1/(8 pi), p_4(1) = 5/(64 pi)
    assert radial_density_oracle(3, 1.0) == pytest.approx(1 / (8 * math.pi), rel=1e-14)
    assert radial_density_oracle(4, 1.0) == pytest.approx(5 / (64 * math.pi), rel=1e-14)
    assert density_radial(WalkSpec(3, 4), 1.0) == pytest.approx(5 / (64 * math.pi), abs=1e-6)


@pytest.mark.parametrize("n, N", [(3, 4), (2, 6), (4, 3)])
def test_density_vanishes_beyond_reach(n, N):
    spec = WalkSpec(n, N)
    for r in (N + 0.1, N + 0.5):
        assert abs(density_radial_raw(spec, r)) < 1e-6


@pytest.mark.parametrize("n, N", [(3, 4), (2, 8), (4, 3)])
def test_total_mass(n, N):
    assert total_mass(WalkSpec(n, N)) == pytest.approx(1.0, abs=1e-4)


def test_total_mass_requires_integrable():
    with pytest.raises(ValueError):
        total_mass(WalkSpec(3, 2))


def test_clipping_is_small():
    spec = WalkSpec(3, 5)
    raw = [density_radial_raw(spec, r) for r in np.linspace(4.9, 5.5, 7)]
    assert min(raw) > -1e-6
    assert all(density_radial(spec, r) >= 0 for r in np.linspace(4.9, 5.5, 7))


@pytest.mark.parametrize("N", [3, 4])
@pytest.mark.parametrize("R", [0.5, 1.2, 2.5])
def test_cdf_matches_exact_law(N, R):
    from scipy.integrate import quad

    exact = quad(lambda x: float(pearson3_radial_law(N, x)), 0, R, points=[1, 2], epsabs=1e-12)[0]
    assert radial_cdf(WalkSpec(3, N), R) == pytest.approx(exact, abs=1e-6)


def test_cdf_edges():
    spec = WalkSpec(3, 4)
    assert radial_cdf(spec, 0.0) == 0.0
    assert radial_cdf(spec, 4.0) == 1.0


def test_domain_errors():
    with pytest.raises(ValueError):
        density_radial(WalkSpec(3, 1), 0.5)
    with pytest.raises(ValueError):
        density_radial(WalkSpec(3, 2), 0.05)
    with pytest.raises(ValueError):
        density_radial(WalkSpec(3, 4), 0.0)
    with pytest.raises(ValueError):
        WalkSpec(3, 2, samples=999)
    with pytest.raises(ValueError):
        WalkSpec(1, 2)
    # integrable cases accept small radii
    assert density_radial(WalkSpec(3, 4), 0.05) > 0


def test_single_step_lives_on_sphere():
    res = mc_walk(WalkSpec(3, 1, samples=5000))
    assert np.max(np.abs(res.radii - 1.0)) < 1e-12


@pytest.mark.parametrize("n", [2, 3])
@pytest.mark.parametrize("N", [2, 5, 10])
def test_mean_square_radius(n, N):
    res = mc_walk(WalkSpec(n, N, samples=100_000, seed=7))
    sq = res.radii**2
    se = sq.std(ddof=1) / math.sqrt(sq.size)
    assert abs(sq.mean() - N) <= 3 * se


def test_mc_deterministic_across_workers(monkeypatch):
    spec = WalkSpec(3, 4, samples=150_000, seed=11)
    a = mc_walk(spec, workers=1).radii
    b = mc_walk(spec, workers=3).radii
    monkeypatch.setenv("MODSPHERE_THREADS", "2")
    c = mc_walk(spec, workers=8).radii
    assert np.array_equal(a, b) and np.array_equal(a, c)
    assert not np.array_equal(a, mc_walk(WalkSpec(3, 4, samples=150_000, seed=12)).radii)


def test_mc_agrees_with_quadrature():
    spec = WalkSpec(3, 4, samples=200_000, seed=3)
    res = mc_walk(spec)
    for R in (0.8, 1.6, 2.4, 3.2):
        p = radial_cdf(spec, R)
        assert abs(res.cdf(R) - p) <= 4 * res.stderr(R, p)
    est, se = res.density(1.5, 0.1, 3)
    assert abs(est - density_radial(spec, 1.5)) <= 4 * se


def test_mc_stderr_never_zero():
    res = MCResult(np.sort(np.linspace(0.5, 1.0, 1000)))
    assert res.stderr(0.1) > 0 and res.stderr(2.0) > 0
    assert res.histogram([0, 0.75, 1.0]).sum() == 1000


def test_write_walk_csv(tmp_path):
    path = tmp_path / "w.csv"
    write_walk_csv(path, [(0.5, 0.1, 0.11, 0.01)])
    lines = path.read_text().splitlines()
    assert lines[0] == "r,density_quadrature,density_mc,mc_stderr"
    assert lines[1] == "0.5,0.1,0.11,0.01"
