import math

import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.integrate import quad

from slabdecay import geometry as geo
from slabdecay.surface import make_catalog_patch, make_closed_body

angles = st.floats(-1.45, 1.45)


def _grid_min(patch, w, m=401):
    if patch.n == 1:
        x = np.linspace(-patch.r0, patch.r0, 20001)[:, None]
    else:
        g = np.linspace(-patch.r0, patch.r0, m)
        X, Y = np.meshgrid(g, g)
        x = np.stack([X.ravel(), Y.ravel()], axis=-1)
        x = x[np.sum(x * x, axis=-1) <= patch.r0**2]
    return float(patch.phase(x, w).min())


@pytest.mark.invariant
@given(angles)
def test_support_min_parabola_closed_form(th):
    patch = make_catalog_patch("power", p=2, n=1)
    w = np.array([math.sin(th), math.cos(th)])
    res = geo.support_min(patch, w)
    xs = -math.tan(th) / 2
    if abs(xs) <= 1:
        exact = -math.sin(th) ** 2 / (4 * math.cos(th))
    else:
        x = math.copysign(1.0, xs)
        exact = x * w[0] + x * x * w[1]
    assert res.s == pytest.approx(exact, abs=1e-10)


@pytest.mark.invariant
@pytest.mark.parametrize("name", ["paraboloid", "anisotropic", "cone_patch", "sphere_cap"])
@given(st.floats(0, 2 * np.pi), st.floats(0.05, 1.0))
def test_support_min_matches_grid_oracle(name, az, z):
    patch = make_catalog_patch(name)
    rho = math.sqrt(1 - z * z)
    w = np.array([rho * math.cos(az), rho * math.sin(az), z])
    res = geo.support_min(patch, w)
    grid = _grid_min(patch, w)
    # never above the grid minimum, and within the grid resolution below it
    assert res.s <= grid + 1e-10
    assert res.s >= grid - 2 * (2 * patch.r0 / 400) * 2.0
    assert np.linalg.norm(res.x0) <= patch.r0 * (1 + 1e-12)


def test_support_min_rejects_downward_direction():
    with pytest.raises(ValueError):
        geo.support_min(make_catalog_patch("power"), np.array([0.0, -1.0]))


def test_support_max_normal_direction():
    patch = make_catalog_patch("paraboloid")
    assert geo.support_max(patch, np.array([0.0, 0.0, 1.0])) == pytest.approx(1.0, abs=1e-9)


def test_parabola_normal_slab_is_arc_length():
    patch = make_catalog_patch("power", p=2, n=1)
    got = geo.slab_measure(patch, np.array([0.0, 1.0]), 0.0, 0.01)
    exact = quad(lambda x: math.sqrt(1 + 4 * x * x), -0.1, 0.1)[0]
    assert got == pytest.approx(exact, rel=1e-10)


@pytest.mark.parametrize("width", [1e-4, 1e-2, 0.3])
def test_paraboloid_normal_slab_closed_form(width):
    patch = make_catalog_patch("paraboloid")
    got = geo.slab_measure(patch, np.array([0.0, 0.0, 1.0]), 0.0, width)
    exact = math.pi / 6 * ((1 + 4 * width) ** 1.5 - 1)
    assert got == pytest.approx(exact, rel=2e-3)


def test_patch_area_of_paraboloid():
    exact = math.pi / 6 * (5**1.5 - 1)
    assert geo.patch_area(make_catalog_patch("paraboloid")) == pytest.approx(exact, rel=2e-3)


@pytest.mark.invariant
@given(st.floats(-0.9, 0.9), st.floats(0.0, 0.5), st.floats(0.0, 0.5))
def test_slab_additivity_and_monotonicity_1d(th, a, b):
    patch = make_catalog_patch("power", p=4, n=1)
    w = np.array([math.sin(th), math.cos(th)])
    s = geo.support_min(patch, w).s
    lo, mid, hi = s, s + a, s + a + b
    m = geo.patch_slab_measures(patch, w, [lo, mid, lo], [mid, hi, hi])
    # at a quartic minimum the 1e-10 support tolerance is worth ~1e-8 of arc
    assert m[2] == pytest.approx(m[0] + m[1], rel=1e-9, abs=1e-7)
    assert m[2] >= max(m[0], m[1]) - 1e-12


@pytest.mark.invariant
@given(st.floats(0.2, 1.0), st.floats(0.0, 2 * np.pi))
def test_slab_additivity_and_monotonicity_2d(z, az):
    patch = make_catalog_patch("paraboloid")
    rho = math.sqrt(1 - z * z)
    w = np.array([rho * math.cos(az), rho * math.sin(az), z])
    s = geo.support_min(patch, w).s
    widths = np.array([0.01, 0.05, 0.1, 0.3, 1.0])
    cum = geo.anchored_measures(patch, w, widths)
    assert np.all(np.diff(cum) >= -1e-12)
    parts = geo.patch_slab_measures(patch, w, [s, s + 0.1], [s + 0.1, s + 0.3])
    assert parts.sum() == pytest.approx(cum[3], rel=5e-3)


@pytest.mark.invariant
def test_sphere_bands_follow_archimedes():
    ball = make_closed_body("ball")
    v = np.array([0.3, -0.4, math.sqrt(0.75)])
    for lo, hi in [(-1.0, -0.9), (-0.2, 0.3), (0.5, 1.0)]:
        got = geo.body_slab_measure(ball, v, lo, hi)
        assert got == pytest.approx(2 * math.pi * (hi - lo), rel=3e-3)


@pytest.mark.parametrize("t", [10.0, 50.0, 1e4])
def test_circle_max_slab_is_tangent_cap(t):
    disk = make_closed_body("disk")
    v = np.array([math.cos(0.3), math.sin(0.3)])
    # a slab edge a few ulp off s(v) moves by ~1e-8 on a round minimum
    assert geo.max_slab(disk, v, t) == pytest.approx(2 * math.acos(1 - 1 / t), rel=5e-6)


def test_superellipse_flat_direction_slab():
    body = make_closed_body("superellipse")
    t = 1e4
    ystar = (1 - (1 - 1 / t) ** 4) ** 0.25

    def speed(y):
        x = (1 - y**4) ** 0.25
        return math.sqrt(1 + (y**3 / x**3) ** 2)
    exact = 2 * quad(speed, 0, ystar)[0]
    got = geo.max_slab(body, np.array([1.0, 0.0]), t)
    assert got == pytest.approx(exact, rel=1e-4)
    assert got == pytest.approx(2 * (4 / t) ** 0.25, rel=2e-2)


def test_dyadic_split():
    head, tail = geo.dyadic_from_cumulative([1.0, 3.0, 3.5, 5.5])
    assert head == 1.0
    assert tail == pytest.approx(2.0 / 2 + 0.5 / 4 + 2.0 / 8)


def test_dyadic_rhs_dominates_head():
    patch = make_catalog_patch("paraboloid")
    v = np.array([0.0, 0.6, 0.8])
    head, tail = geo.dyadic_rhs(patch, v, 100.0)
    assert head == pytest.approx(geo.anchored_measures(patch, v, [0.01])[0])
    assert tail > 0


@given(st.floats(0.05, 2.0), st.floats(0.1, 10.0))
def test_fit_power_law_recovers_exact_law(alpha, c):
    ts = geo.geometric_grid(10, 1e4, 4)
    fit = geo.fit_power_law([(t, c * t**-alpha) for t in ts])
    assert fit.alpha == pytest.approx(alpha, abs=1e-9)
    assert fit.c == pytest.approx(c, rel=1e-8)


def test_fit_power_law_validation():
    ts = geo.geometric_grid(10, 1e4, 2)
    with pytest.raises(ValueError):
        geo.fit_power_law([(t, 1.0) for t in ts[:4]])
    with pytest.raises(ValueError):
        geo.fit_power_law([(t, 1.0) for t in np.linspace(10, 100, 8)])
    with pytest.raises(ValueError):
        geo.fit_power_law([(t, -1.0) for t in ts])


def test_geometric_grid_counts():
    g = geo.geometric_grid(10, 1e4, 6)
    assert g.size == 19 and g[0] == pytest.approx(10) and g[-1] == pytest.approx(1e4)
    assert g[::2].size == 10
