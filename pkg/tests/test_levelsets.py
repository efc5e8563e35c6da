import numpy as np
import pytest

from _oracles import segment_distance
from flatcurv.currents import Polyline, PolylineCurrent, mass
from flatcurv.field import ScalarField
from flatcurv.levelsets import (CORNER_THRESHOLD, _bilinear, curvature_density, default_levels,
                                extract_jump_set, extract_level_sets, introduce_discontinuity,
                                level_weights, turning_angles)
from flatcurv.optimize import EnergyConfig, EnergyWeights, energy
from flatcurv.scenes import circle_polyline


def cone(n=256):
    h = 2.0 / (n - 1)
    return ScalarField.from_function(lambda x, y: np.maximum(0, 1 - np.hypot(x, y)), n, n, h,
                                     origin=(-1.0, -1.0))


def shift(c: PolylineCurrent, d):
    return PolylineCurrent(Polyline(p.vertices + d, p.closed, p.multiplicity) for p in c)


def test_levels_and_weights():
    np.testing.assert_allclose(default_levels(4), [0.125, 0.375, 0.625, 0.875])
    np.testing.assert_allclose(level_weights(default_levels(8)), 1 / 8)
    assert level_weights([0.5]).tolist() == [1.0]
    with pytest.raises(ValueError):
        extract_level_sets(cone(16), [])
    with pytest.raises(ValueError):
        extract_level_sets(cone(16), np.linspace(0.01, 0.99, 257))


def test_cone_contour_is_circle():
    f = cone(256)
    fam = extract_level_sets(f, [0.5])
    (c,) = fam.currents
    assert len(c) == 1 and c.polylines[0].closed
    # contour coordinates live in pixel units from the corner; shift to the origin
    assert mass(c) == pytest.approx(np.pi, rel=0.01)
    turn = turning_angles(c.polylines[0]).sum()
    assert turn == pytest.approx(2 * np.pi, abs=1e-6)


def test_constant_field_has_no_contours():
    f = ScalarField(np.full((10, 10), 0.7))
    assert len(extract_level_sets(f, [0.5]).currents[0]) == 0


def test_ramp_contour_orientation():
    n = 33
    f = ScalarField.from_function(lambda x, y: x, n, n, 1.0 / (n - 1))
    (c,) = extract_level_sets(f, [0.5]).currents
    assert len(c) == 1 and not c.polylines[0].closed
    p = c.polylines[0]
    np.testing.assert_allclose(p.vertices[:, 0], 0.5, atol=1e-12)
    # higher values on the left of travel
    d = p.ends - p.starts
    left = np.stack([-d[:, 1], d[:, 0]], axis=1)
    assert np.all(left[:, 0] > 0)


def test_orientation_invariant_random_field():
    rng = np.random.default_rng(1)
    from scipy.ndimage import gaussian_filter
    v = gaussian_filter(rng.random((48, 48)), 3)
    v = (v - v.min()) / (v.max() - v.min())
    f = ScalarField(v, 1.0)
    for lev, c, _ in extract_level_sets(f, default_levels(5)):
        lv, rv = [], []
        for p in c:
            mid = 0.5 * (p.starts + p.ends)
            d = (p.ends - p.starts) / p.lengths[:, None]
            nrm = np.stack([-d[:, 1], d[:, 0]], axis=1)
            # sub-pixel loops around extrema are below the bilinear probe's resolution
            inside = np.all((mid > 1) & (mid < 46), axis=1) & (p.lengths.sum() > 1.0)
            off = 0.5 * nrm
            lv.append(_bilinear(v, 1.0, mid + off)[inside])
            rv.append(_bilinear(v, 1.0, mid - off)[inside])
            if p.closed:
                assert abs(abs(turning_angles(p).sum()) - 2 * np.pi) < 1e-6
        lv, rv = np.concatenate(lv), np.concatenate(rv)
        assert np.all(lv > rv)
        # bilinear samples differ from the piecewise-linear contour surface on
        # tight loops around extrema, so the level bracket is checked in bulk
        assert np.mean(lv >= lev - 1e-6) > 0.9
        assert np.mean(rv <= lev + 1e-6) > 0.9


def test_same_level_contours_do_not_cross():
    rng = np.random.default_rng(4)
    from scipy.ndimage import gaussian_filter
    v = gaussian_filter(rng.random((40, 40)), 2)
    f = ScalarField(v, 1.0)
    (c,) = extract_level_sets(f, [float(np.median(v))]).currents
    segs = [(s, e) for p in c for s, e in zip(p.starts, p.ends)]

    def cross(a, b, c_, d):
        o = lambda p, q, r: np.sign((q[0] - p[0]) * (r[1] - p[1]) - (q[1] - p[1]) * (r[0] - p[0]))
        return o(a, b, c_) * o(a, b, d) < 0 and o(c_, d, a) * o(c_, d, b) < 0

    S = np.array([[s, e] for s, e in segs])
    lo, hi = S.min(axis=1), S.max(axis=1)
    for i in range(len(S)):
        ov = np.flatnonzero(np.all(lo[i + 1:] <= hi[i], 1) & np.all(hi[i + 1:] >= lo[i], 1))
        for j in ov + i + 1:
            assert not cross(S[i, 0], S[i, 1], S[j, 0], S[j, 1])


def test_curvature_density_straight_and_polygons():
    cc = curvature_density(PolylineCurrent([Polyline([[0, 0], [1, 0], [2, 0], [5, 0]])]))
    assert np.all(cc.smooth_density[0] == 0) and not cc.atoms
    for m in (3, 4, 7, 64, 200):
        cc = curvature_density(PolylineCurrent([circle_polyline(0, 0, 1.0, m)]))
        assert cc.total_turning()[0] == pytest.approx(2 * np.pi, abs=1e-9)
        assert cc.unsigned_total() == pytest.approx(2 * np.pi, abs=1e-9)


@pytest.mark.parametrize("smoothing", [0.0, 0.3])
def test_circle_curvature_density(smoothing):
    r = 0.7
    cc = curvature_density(PolylineCurrent([circle_polyline(0, 0, r, 64)]), smoothing=smoothing)
    np.testing.assert_allclose(np.abs(cc.smooth_density[0]), 1 / r, rtol=0.02)
    assert not cc.atoms


def test_atoms_and_multiplicities():
    sq = PolylineCurrent([Polyline([[0, 0], [1, 0], [1, 1], [0, 1]], True, 2.0)])
    cc = curvature_density(sq)
    assert len(cc.atoms) == 4
    assert all(abs(a.turn - np.pi / 2) < 1e-12 and a.weight == 2.0 for a in cc.atoms)
    m = cc.segment_multiplicities()
    # each atom is spread over its two incident unit segments
    assert sum(float(mm @ p.lengths) for mm, p in zip(m, sq)) == pytest.approx(4 * np.pi)
    assert cc.to_json()["atoms"][0]["turn"] == pytest.approx(np.pi / 2)


def test_smoothing_conserves_turning_on_open_curve():
    rng = np.random.default_rng(0)
    pts = np.cumsum(rng.normal(size=(40, 2)) * 0.1 + [0.2, 0], axis=0)
    p = Polyline(pts)
    a = curvature_density(PolylineCurrent([p]), corner_threshold=np.pi)
    b = curvature_density(PolylineCurrent([p]), corner_threshold=np.pi, smoothing=0.5)
    assert a.total_turning()[0] == pytest.approx(b.total_turning()[0], abs=1e-9)


def test_degenerate_segment_rejected():
    with pytest.raises(ValueError):
        Polyline([[0, 0], [0, 0]])


def step_image(width, height, hgt=0.8, x0=None):
    x0 = width / 2 if x0 is None else x0
    v = np.where(np.arange(width)[None, :] > x0, 0.1 + hgt, 0.1)
    return ScalarField(np.repeat(v, height, axis=0).astype(float), 1.0)


def test_jump_set_of_step():
    f = step_image(40, 60)
    js = extract_jump_set(f, 0.2)
    assert len(js) == 1
    assert abs(js.length() - 59) <= 2
    assert np.all(np.abs(js.heights()[0] - 0.8) <= 0.05)
    assert np.all(js.f1[0] > js.f2[0])


def test_jump_set_gates():
    ramp = ScalarField.from_function(lambda x, y: x / 100, 50, 50, 1.0)
    assert len(extract_jump_set(ramp, 0.2)) == 0
    short = step_image(40, 4)
    assert len(extract_jump_set(short, 0.2, min_length=10)) == 0
    with pytest.raises(ValueError):
        extract_jump_set(ramp, 0.0)


def test_introduce_discontinuity_on_steep_sigmoid():
    n = 64
    h = 1.0 / (n - 1)
    f = ScalarField.from_function(
        lambda x, y: 0.05 + 0.9 / (1 + np.exp(-(x - 0.5) / h)), n, 50, h)
    w = EnergyWeights()
    cfg = EnergyConfig(complex_cell=8)
    E = lambda fld, js: energy(fld, f, w, cfg, js).total
    f2, cuts = introduce_discontinuity(f, 5.0, 10 * h, 0.2, E)
    assert len(cuts) == 1
    assert E(f2, cuts) < E(f, None)
    ramp = ScalarField.from_function(lambda x, y: 0.2 + 0.5 * x, n, n, h)
    Er = lambda fld, js: energy(fld, ramp, w, cfg, js).total
    same, none = introduce_discontinuity(ramp, 5.0, 10 * h, 0.2, Er)
    assert len(none) == 0 and same is ramp


def test_short_blob_not_cut():
    v = np.full((40, 40), 0.1)
    v[18:21, 18:21] = 0.9
    f = ScalarField(v, 1.0)
    _, cuts = introduce_discontinuity(f, 0.2, 20.0, 0.2, lambda fl, js: 0.0)
    assert len(cuts) == 0


def test_contours_follow_analytic_circle():
    n = 200
    h = 1.0 / (n - 1)
    f = ScalarField.from_function(lambda x, y: (np.hypot(x - 0.5, y - 0.5) < 0.3) * 1.0, n, n, h)
    (c,) = extract_level_sets(f, [0.5]).currents
    pts = np.concatenate([p.vertices for p in c])
    assert np.max(np.abs(np.hypot(pts[:, 0] - 0.5, pts[:, 1] - 0.5) - 0.3)) <= 1.5 * h
    assert CORNER_THRESHOLD == pytest.approx(np.pi / 6)
    assert segment_distance([[0, 1]], np.array([0.0, 0]), np.array([1.0, 0]))[0] == 1.0
