import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from flatcurv.fidelity import f1_l1, f2_flat_fidelity
from flatcurv.field import ScalarField
from flatcurv.optimize import (DescentParams, DescentTrace, EnergyConfig, EnergyWeights,
                               curvature_flow_step, descend, energy, level_tuples,
                               region_flatnorm_penalty, region_regularity_cost)
from flatcurv.regularity import (r1_total_curvature, r3_crease_curvature, r4_graph_mass,
                                 r5_hessian_energy)
from flatcurv.scenes import SceneSpec, generate


def disc_image(n=64, r=0.2, c=0.5, bg=0.2, width=1.5):
    h = 1.0 / (n - 1)
    return ScalarField.from_function(
        lambda x, y: bg + c * (0.5 + 0.5 * np.tanh((r - np.hypot(x - 0.5, y - 0.5)) / (width * h))),
        n, n, h)


def test_weights_validation():
    with pytest.raises(ValueError):
        EnergyWeights(gamma3=-1)
    with pytest.raises(ValueError):
        EnergyWeights(gamma7=np.nan)
    w = EnergyWeights.only(gamma6=2.0)
    assert w.as_array().tolist() == [0, 0, 0, 0, 0, 2.0, 0]


def test_config_validation():
    with pytest.raises(ValueError):
        EnergyConfig(epsilon=0)
    with pytest.raises(ValueError):
        EnergyConfig(crease_threshold=-1)
    d = EnergyConfig().to_json()
    json.dumps(d, allow_nan=False)


def test_zero_weights_and_identity():
    f = disc_image()
    g = f.with_values(f.values + 0.05)
    assert energy(f, g, EnergyWeights.only()).total == 0
    cfg = EnergyConfig(complex_cell=8)
    assert energy(f, f, EnergyWeights.only(gamma6=1, gamma7=1), cfg).total == 0


def test_energy_equals_module_sum():
    f = disc_image()
    g = disc_image(r=0.25)
    cfg = EnergyConfig(complex_cell=8)
    w = EnergyWeights(1, 2, 3, 0.5, 1e-4, 7, 0.3)
    e = energy(f, g, w, cfg)
    parts = [r1_total_curvature(f, cfg.epsilon), 0.0, r3_crease_curvature(f, cfg.crease_threshold),
             r4_graph_mass(f), r5_hessian_energy(f), f1_l1(f, g), f2_flat_fidelity(f, g, cfg)]
    np.testing.assert_allclose(e.terms(), parts, rtol=1e-12)
    assert e.total == pytest.approx(float(np.dot(w.as_array(), parts)), rel=1e-9)
    js = e.to_json()
    assert set(js["regularity"]) == {"r1", "r2", "r3", "r4", "r5"}
    assert js["weighted"]["f1"] == pytest.approx(7 * parts[5])


def test_zero_weight_terms_on_demand():
    f = disc_image()
    e = energy(f, f, EnergyWeights.only(gamma1=1), EnergyConfig(complex_cell=8))
    assert e.r4 == 0
    e = energy(f, f, EnergyWeights.only(gamma1=1), EnergyConfig(complex_cell=8), evaluate_all=True)
    assert e.r4 > 0 and e.total == pytest.approx(e.r1)


def test_region_cost_examples():
    assert region_regularity_cost([(0, 0, 3, 4)]) == 5
    assert region_regularity_cost([(0, 0, 1, 0), (0, 0, 0, 1)]) == 2
    assert region_regularity_cost([(0, 0, 1, 0), (0, 0, -1, 0)]) == 2
    assert region_flatnorm_penalty([(0, 0, 1, 0), (0, 0, 0, 1)]) == pytest.approx(np.sqrt(2))
    assert region_flatnorm_penalty([(0, 0, 1, 0), (0, 0, -1, 0)]) == 0
    assert region_flatnorm_penalty([(0, 0, 3, 4)]) == 5
    assert region_regularity_cost([]) == region_flatnorm_penalty([]) == 0


@settings(max_examples=200, deadline=None)
@given(st.lists(st.tuples(st.floats(-5, 5), st.floats(-5, 5)), min_size=1, max_size=12))
def test_penalty_below_cost(ab):
    t = [(0.0, 0.0, a, b) for a, b in ab]
    assert region_flatnorm_penalty(t) <= region_regularity_cost(t) + 1e-9


@settings(max_examples=50, deadline=None)
@given(st.floats(0, 2 * np.pi), st.lists(st.floats(0.1, 3), min_size=1, max_size=8))
def test_parallel_equality(theta, lengths):
    t = [(0.0, 0.0, L * np.cos(theta), L * np.sin(theta)) for L in lengths]
    assert region_flatnorm_penalty(t) == pytest.approx(region_regularity_cost(t), rel=1e-12)


def test_level_tuples_match_weighted_contours():
    f = disc_image()
    tup = level_tuples(f, [0.3, 0.5])
    assert tup.shape[1] == 4
    # a closed contour has zero net (a, b)
    assert region_flatnorm_penalty(tup) == pytest.approx(0, abs=1e-9)
    assert region_regularity_cost(tup) > 0


def test_descent_params_validation():
    for kw in ({"step": 0.3}, {"step": 0}, {"region_size": 2}, {"max_iters": -1},
               {"trigger_ratio": 0.5}, {"threads": 0}):
        with pytest.raises(ValueError):
            DescentParams(**kw)


def test_trace_rejects_non_decreasing_acceptance():
    t = DescentTrace()
    t.add(0, 5.0, "start", True)
    t.add(1, 6.0, "x", False)
    t.add(1, 4.0, "y", True)
    with pytest.raises(AssertionError):
        t.add(2, 4.0, "z", True)
    assert t.accepted_energies() == [5.0, 4.0] and t.n_accepted == 1
    lines = t.to_jsonl().splitlines()
    assert json.loads(lines[1]) == {"iteration": 1, "total": 6.0, "step": "x", "accepted": False}


def test_curvature_flow_keeps_affine_and_shrinks_r1():
    ramp = ScalarField.from_function(lambda x, y: 0.3 * x + 0.1 * y, 32, 32, 1 / 31)
    np.testing.assert_allclose(curvature_flow_step(ramp, 0.2).values, ramp.values, atol=1e-12)
    rng = np.random.default_rng(0)
    noisy = ramp.with_values(ramp.values + 0.05 * rng.random(ramp.shape))
    assert r1_total_curvature(curvature_flow_step(noisy, 0.2)) < r1_total_curvature(noisy)


def test_smooth_fixed_point():
    g = ScalarField.from_function(lambda x, y: 0.2 + 0.5 * x, 48, 48, 1 / 47)
    w = EnergyWeights.only(gamma1=1, gamma6=1, gamma7=1)
    f, trace = descend(g, g, w, DescentParams(max_iters=3), EnergyConfig(complex_cell=8))
    assert trace.n_accepted == 0
    np.testing.assert_array_equal(f.values, g.values)


def noisy_scene(seed=0):
    spec = SceneSpec("disc_pack", n=4, resolution=72, contrast=0.4, background="ramp",
                     seed=seed)
    return generate(spec)


def test_descend_decreases_and_is_deterministic():
    sc = noisy_scene()
    g = sc.image
    w = EnergyWeights.only(gamma1=1, gamma6=1, gamma7=0.1)
    cfg = EnergyConfig(complex_cell=8)
    p = DescentParams(max_iters=3, region_size=8, seed=3)
    f1, t1 = descend(g, g, w, p, cfg)
    f2, t2 = descend(g, g, w, p, cfg)
    acc = t1.accepted_energies()
    assert len(acc) >= 2 and all(b < a for a, b in zip(acc, acc[1:]))
    assert t1.to_jsonl() == t2.to_jsonl()
    np.testing.assert_array_equal(f1.values, f2.values)
    assert energy(f1, g, w, cfg).total == pytest.approx(acc[-1], rel=1e-12)


def test_descend_with_discontinuities_never_increases():
    n = 48
    h = 1 / (n - 1)
    g = ScalarField.from_function(lambda x, y: 0.1 + 0.8 / (1 + np.exp(-(x - 0.5) / h)), n, n, h)
    w = EnergyWeights.only(gamma1=1, gamma2=1, gamma4=1, gamma6=1)
    p = DescentParams(max_iters=2, discontinuities=True, grad_threshold=5.0, region_size=6)
    f, t = descend(g, g, w, p, EnergyConfig(complex_cell=8))
    acc = t.accepted_energies()
    assert all(b < a for a, b in zip(acc, acc[1:]))


def test_scale_dial_homothety_consistency():
    # with only curvature regularity and curvature fidelity, scaling the disc
    # radius and the flat-norm unit together leaves the flatten decision alone
    decisions = []
    for gamma7 in (0.5, 4.0):
        w = EnergyWeights.only(gamma1=1, gamma7=gamma7)
        row = []
        for s in (1.0, 2.0):
            g = disc_image(n=96, r=0.08 * s, c=0.5)
            cfg = EnergyConfig(complex_cell=4, scale=0.05 * s)
            flat = g.with_values(np.full(g.shape, 0.2))
            row.append(energy(flat, g, w, cfg).total < energy(g, g, w, cfg).total)
        decisions.append(row)
    assert decisions[0][0] == decisions[0][1]
    assert decisions[1][0] == decisions[1][1]
    assert decisions[0][0] != decisions[1][0]
