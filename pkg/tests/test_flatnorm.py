import numpy as np
import pytest

from _oracles import (brute_force_eliminate, brute_force_enumerate, random_integer_chain,
                      random_small_complex)
from flatcurv.complex import Chain, SimplicialComplex2, boundary, box_complex
from flatcurv.currents import PolylineCurrent, mass, rasterize_to_chain
from flatcurv.flatnorm import flat_norm_dual, flat_norm_primal
from flatcurv.scenes import circle_polyline


def triangle(size):
    return SimplicialComplex2([[0, 0], [size, 0], [0, size]], [[0, 1, 2]])


def test_zero_chain():
    k = triangle(1.0)
    dec = flat_norm_primal(Chain.zeros(k, 1), k)
    assert dec.value == 0 and mass(dec.t_chain) == 0
    assert flat_norm_dual(Chain.zeros(k, 1), k) == 0


@pytest.mark.parametrize("size,scale", [(1.0, 1.0), (1.0, 0.01), (10.0, 1.0), (0.1, 100.0)])
def test_triangle_fill_or_keep(size, scale):
    k = triangle(size)
    x = boundary(Chain(k, 2, [1.0]))
    area, perim = k.tri_areas[0], mass(x)
    dec = flat_norm_primal(x, k, scale)
    assert dec.value == pytest.approx(min(perim, area / scale), rel=1e-9)


def test_decomposition_invariants():
    rng = np.random.default_rng(5)
    k = box_complex((0, 0), (1, 1), 0.1)
    for _ in range(5):
        x = Chain(k, 1, rng.normal(size=k.n_edges) * (rng.random(k.n_edges) < 0.2))
        dec = flat_norm_primal(x, k, 0.3)
        assert dec.value == pytest.approx(dec.mass_r + dec.mass_t, abs=1e-8)
        np.testing.assert_allclose((dec.r_chain + boundary(dec.t_chain)).coefficients,
                                   x.coefficients, atol=1e-8)
        assert dec.value <= mass(x) + 1e-9
        assert 0 <= dec.fill_fraction <= 1


def test_norm_axioms():
    rng = np.random.default_rng(11)
    k = box_complex((0, 0), (1, 1), 0.125)
    for _ in range(4):
        a = Chain(k, 1, rng.integers(-2, 3, k.n_edges) * (rng.random(k.n_edges) < 0.3))
        b = Chain(k, 1, rng.integers(-2, 3, k.n_edges) * (rng.random(k.n_edges) < 0.3))
        fa, fb = flat_norm_primal(a, k).value, flat_norm_primal(b, k).value
        assert flat_norm_primal(a + b, k).value <= fa + fb + 1e-6
        assert flat_norm_primal(-2.5 * a, k).value == pytest.approx(2.5 * fa, abs=1e-6)


def test_weak_duality_and_form_bounds():
    rng = np.random.default_rng(2)
    k = box_complex((0, 0), (1, 1), 0.1)
    for scale in (0.05, 1.0):
        x = Chain(k, 1, rng.normal(size=k.n_edges))
        p = flat_norm_primal(x, k, scale).value
        form = flat_norm_dual(x, k, scale, return_form=True)
        assert form.value <= p + 1e-6
        assert form.value == pytest.approx(p, rel=1e-6)
        assert np.all(np.abs(form.phi) <= 1 + 1e-7)
        assert np.all(np.abs(form.dphi) <= 1 / scale + 1e-6)


def test_small_oracle_agreement():
    rng = np.random.default_rng(123)
    for _ in range(10):
        k = random_small_complex(rng, max_triangles=6)
        x = random_integer_chain(rng, k)
        ref = brute_force_enumerate(k, x.coefficients)
        assert brute_force_eliminate(k, x.coefficients) == pytest.approx(ref, abs=1e-9)
        assert flat_norm_primal(x, k).value == pytest.approx(ref, abs=1e-6)


@pytest.mark.parametrize("r,m", [(0.3, 1), (0.45, 2)])
def test_circle(r, m):
    k = box_complex((-0.6, -0.6), (0.6, 0.6), r / 16)
    x = rasterize_to_chain(PolylineCurrent([circle_polyline(0, 0, r, 64, m)]), k)
    dec = flat_norm_primal(x, k, 1.0)
    ref = min(2 * np.pi * r * m, np.pi * r * r * m)
    assert abs(dec.value - ref) <= 0.07 * ref
    assert dec.fill_fraction > 0.9


def test_opposite_parallel_chains_cancel():
    k = box_complex((0, 0), (1, 1), 0.01)
    vals = []
    for d in (0.1, 0.05, 0.02):
        c = PolylineCurrent.from_segments([[0.2, 0.5], [0.8, 0.5 + d]],
                                          [[0.8, 0.5], [0.2, 0.5 + d]])
        x = rasterize_to_chain(c, k)
        assert mass(x) == pytest.approx(1.2, rel=1e-9)
        vals.append(flat_norm_primal(x, k).value)
        # fill the strip and pay for the two short end caps
        assert vals[-1] == pytest.approx(0.6 * d + 2 * d, rel=1e-6)
    assert vals[0] > vals[1] > vals[2]


def test_rejects_bad_scale_and_dimension():
    k = triangle(1.0)
    with pytest.raises(ValueError):
        flat_norm_primal(Chain.zeros(k, 1), k, 0.0)
    with pytest.raises(ValueError):
        flat_norm_primal(Chain.zeros(k, 2), k)
    with pytest.raises(ValueError):
        flat_norm_primal(Chain.zeros(triangle(1.0), 1), k)
