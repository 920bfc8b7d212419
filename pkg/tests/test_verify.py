import math

import numpy as np
import pytest
from hypothesis import given, strategies as st

from slabdecay import verify as vf
from slabdecay.surface import (
    halfspace_carving,
    literal_paired_carving,
    make_catalog_patch,
    make_closed_body,
)

TS = vf.frequency_grid(10.0, 1e3, 3)


@pytest.mark.parametrize("n,count", [(1, 17), (2, 64)])
def test_direction_grid(n, count):
    d = vf.direction_grid(n, count)
    assert d.shape == (count, n + 1)
    assert np.allclose(np.linalg.norm(d, axis=1), 1.0)
    assert np.all(d[:, -1] >= 0)


def test_frequency_grid_validation():
    with pytest.raises(ValueError):
        vf.frequency_grid(10.0, 1.0, 3)


def test_record_contract():
    r = vf.VerificationRecord.make("x", (0.0, 1.0), 10.0, 0.5, 2.0)
    assert r.ratio == 0.25
    assert vf.VerificationRecord.make("x", (0.0, 1.0), 10.0, 0.0, 0.0).ratio == 0.0
    with pytest.raises(ValueError):
        vf.VerificationRecord.make("x", (0.0, 1.0), 10.0, -1.0, 1.0)
    with pytest.raises(ArithmeticError):
        vf._record("x", (0.0, 1.0), 10.0, 1.0, 0.0, 1e-12)


@given(st.floats(-1.5, 1.5))
def test_envelope_trend_of_power_law(slope):
    ts = vf.frequency_grid(10.0, 1e5, 8)
    # truncated windows at the ends pull the slope slightly toward zero
    got = vf.envelope_trend(ts, ts**slope)
    assert abs(got - slope) <= 0.02 * abs(slope) + 1e-12
    assert abs(got) <= abs(slope) + 1e-12


def test_envelope_trend_ignores_zeros():
    ts = vf.frequency_grid(10.0, 1e4, 8)
    vals = np.abs(np.cos(ts)) * ts**-0.5
    vals[::3] = 0.0
    assert abs(vf.envelope_trend(ts, vals) + 0.5) < 0.1


@pytest.mark.invariant
def test_anchored_check_on_parabola_is_bounded_and_deterministic():
    patch = make_catalog_patch("power", p=2, n=1)
    dirs = vf.direction_grid(1, 9)
    ts = vf.frequency_grid(10.0, 1e4, 4)
    a = vf.check_thm11(patch, dirs, ts)
    b = vf.check_thm11(patch, dirs, ts)
    assert len(a.records) == 9 * ts.size
    assert math.isfinite(a.sup_ratio) and a.passes()
    assert [r.row() for r in a.records] == [r.row() for r in b.records]


def test_anchored_check_rejects_carved_patch():
    with pytest.raises(ValueError):
        vf.check_thm11(make_catalog_patch("paraboloid").with_carving(halfspace_carving()))


def test_dyadic_check_empty_carving_has_zero_ratios():
    g = halfspace_carving(1)[0]
    patch = make_catalog_patch("paraboloid").with_carving(literal_paired_carving(g))
    s = vf.check_thm12(patch, vf.direction_grid(2, 4), TS)
    assert s.sup_ratio == 0.0


def test_subset_and_stability():
    patch = make_catalog_patch("power", p=4, n=1)
    ts = vf.frequency_grid(10.0, 1e3, 4)
    fine = vf.check_thm11(patch, vf.direction_grid(1, 5), ts)
    coarse = vf.subset(fine, ts[::2])
    assert len(coarse.records) == 5 * ts[::2].size
    assert vf.grid_stability(coarse, fine) >= 0.0


def test_uniform_decay_and_negative_control():
    circle = make_closed_body("disk")
    dirs = vf.direction_grid(1, 4)
    ts = vf.frequency_grid(10.0, 1e4, 8)
    s = vf.check_uniform_decay(circle, 0.5, dirs, ts)
    assert s.passes()
    assert not vf.rescale_uniform(s, 0.6).passes()
    with pytest.raises(ValueError):
        vf.check_uniform_decay(circle, 1.0, dirs, ts)


def test_sublevel_check_segment_measure():
    seg = vf.SegmentMeasure()
    eps = np.logspace(-6, -2, 5)
    s = vf.check_lemma15(seg, np.array([1.0]), 2.0, 0.5, eps)
    assert s.extra["premise_ok"]
    # an interval of length 2 eps against 2 eps^(1/2)
    assert s.sup_ratio == pytest.approx(math.sqrt(eps[-1]), rel=1e-9)
    with pytest.raises(ValueError):
        vf.check_lemma15(seg, np.array([1.0]), 2.0, 1.0, eps)


def test_tangent_slab_check_small_sweep():
    s = vf.check_eq31(make_closed_body("disk"), vf.direction_grid(1, 3), TS)
    assert math.isfinite(s.sup_ratio) and math.isfinite(s.extra["log_free_sup"])
    with pytest.raises(ValueError):
        vf.check_eq31(make_closed_body("ball"))


def test_union_of_disk_bodies():
    a = make_closed_body("disk", center=(0.0, 0.0))
    b = make_closed_body("disk", center=(1.0, 0.0))
    body = vf.union_body([a, b])
    assert body.is_union
    with pytest.raises(ValueError):
        vf.union_body([a, make_closed_body("disk", radius=2.0)])


def test_write_records_csv(tmp_path):
    recs = [vf.VerificationRecord.make("thm11", (0.6, 0.8), 10.0, 0.1, 0.2)]
    path = tmp_path / "r.csv"
    vf.write_records_csv(recs, path)
    lines = path.read_text().splitlines()
    assert lines[0] == "theorem,v1,v2,t,lhs,rhs,ratio,est_error"
    assert lines[1].startswith("thm11,0.6,0.8,10.0,0.1,0.2,0.5")
