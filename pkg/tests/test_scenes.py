import numpy as np
import pytest

from _oracles import segment_distance
from flatcurv.currents import mass
from flatcurv.levelsets import curvature_density, extract_level_sets
from flatcurv.scenes import KINDS, SceneSpec, disc_pack_layout, generate, sawtooth_vertices


def test_disc_pack_reference_values():
    sc = generate(SceneSpec("disc_pack", n=2, resolution=64))
    assert sc.values.reference["unsigned_regularity"] == pytest.approx(8 * np.pi)
    assert len(sc.current) == 4
    _, r = disc_pack_layout(2)
    assert mass(sc.current) == pytest.approx(4 * 2 * np.pi * r, rel=2e-3)
    per_disc = [curvature_density(type(sc.current)([p])).total_turning()[0] for p in sc.current]
    np.testing.assert_allclose(per_disc, 2 * np.pi, rtol=2e-3)


def test_disc_pack_too_coarse():
    with pytest.raises(ValueError, match="pixels across"):
        generate(SceneSpec("disc_pack", n=8, resolution=40))


def test_sawtooth_values():
    th = np.pi / 6
    sc = generate(SceneSpec("sawtooth_edge", n=8, theta=th, resolution=128))
    assert sc.values.reference["fidelity"] == pytest.approx(0.6046, abs=1e-4)
    assert sc.values.reference["regularity"] == pytest.approx(8 * th)
    cc = curvature_density(sc.current)
    # n-1 interior corners of theta plus two half-turns at the ends
    assert cc.unsigned_total() == pytest.approx(8 * th, rel=1e-9)
    pts, s, _ = sawtooth_vertices(8, th)
    seg = np.diff(pts[1:-1], axis=0)
    np.testing.assert_allclose(np.hypot(*seg.T), s)


def test_semicircle_values():
    sc = generate(SceneSpec("semicircle_bumps", n=4, resolution=256))
    assert sc.values.reference["flat_norm_per_bump"] == pytest.approx(np.pi / 32 + 0.5)
    # an inscribed 64-segment arc turns through 63/64 of a half turn
    for p in sc.current:
        assert curvature_density(type(sc.current)([p])).unsigned_total() == pytest.approx(
            np.pi * 63 / 64, rel=1e-9)


@pytest.mark.parametrize("kind", ["disc_pack", "road_intersection", "step_edge"])
def test_contours_follow_analytic_current(kind):
    sc = generate(SceneSpec(kind, n=2, resolution=128))
    h = sc.image.spacing
    (c,) = extract_level_sets(sc.image, [0.5]).currents
    pts = np.concatenate([p.vertices for p in c])
    S = np.concatenate([p.starts for p in sc.current])
    E = np.concatenate([p.ends for p in sc.current])
    d = np.min(np.stack([segment_distance(pts, s, e) for s, e in zip(S, E)]), axis=0)
    assert d.max() <= 1.5 * h


def test_invalid_specs():
    with pytest.raises(ValueError, match="valid kinds"):
        SceneSpec("spiral")
    for kw in ({"contrast": 0}, {"noise": 1.0}, {"background": "noise"}, {"n": 0},
               {"resolution": 4}):
        with pytest.raises(ValueError):
            SceneSpec("disc_pack", **kw)
    with pytest.raises(ValueError):
        SceneSpec("sawtooth_edge", theta=2.0)
    assert "step_edge" in KINDS


def test_noise_is_seeded():
    a = generate(SceneSpec("disc_pack", n=2, resolution=64, noise=0.05, seed=7)).image.values
    b = generate(SceneSpec("disc_pack", n=2, resolution=64, noise=0.05, seed=7)).image.values
    c = generate(SceneSpec("disc_pack", n=2, resolution=64, noise=0.05, seed=8)).image.values
    np.testing.assert_array_equal(a, b)
    assert not np.array_equal(a, c)
    clean = generate(SceneSpec("disc_pack", n=2, resolution=64)).image.values
    assert 0.02 < np.mean(a != clean) < 0.05


def test_contrast_and_background():
    sc = generate(SceneSpec("step_edge", resolution=32, contrast=0.4, background="ramp"))
    diff = sc.image.values - sc.clean.values
    assert diff.max() == pytest.approx(0.4, abs=1e-3) and diff.min() >= 0
    js = sc.values.to_json()
    assert js["kind"] == "step_edge" and js["reference"]["maximal_lines"] == 1


def test_oracle_values_close_to_closed_forms():
    sc = generate(SceneSpec("semicircle_bumps", n=2, resolution=64), oracle=True)
    o = sc.values.oracle
    assert o["lp_arc_flat_norm_per_bump"] == pytest.approx(o["arc_flat_norm_per_bump"], rel=0.07)
