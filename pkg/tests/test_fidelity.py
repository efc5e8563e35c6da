import numpy as np
import pytest

from flatcurv.complex import box_complex
from flatcurv.currents import Polyline, PolylineCurrent, mass, rasterize_to_chain
from flatcurv.fidelity import (FidelityConfig, build_curvature_current, f1_l1, f2_flat_fidelity,
                               field_complex)
from flatcurv.field import ScalarField
from flatcurv.flatnorm import flat_norm_primal
from flatcurv.levelsets import curvature_density


def disc(n=128, r=0.25, width=1.5):
    h = 1.0 / (n - 1)
    return ScalarField.from_function(
        lambda x, y: 0.5 + 0.5 * np.tanh((r - np.hypot(x - 0.5, y - 0.5)) / (width * h)), n, n, h)


def test_f1():
    rng = np.random.default_rng(0)
    g = ScalarField(rng.random((50, 50)), 1 / 50)
    assert f1_l1(g, g) == 0
    assert f1_l1(g.with_values(g.values + 0.1), g) == pytest.approx(0.1, abs=1e-12)
    n = 256
    ind = ScalarField.from_function(lambda x, y: (np.hypot(x - 0.5, y - 0.5) < 0.25) * 1.0,
                                    n, n, 1 / n, origin=(0.5 / n, 0.5 / n))
    assert f1_l1(ind.with_values(np.zeros((n, n))), ind) == pytest.approx(np.pi / 16, rel=0.02)
    with pytest.raises(ValueError):
        f1_l1(g, ScalarField(np.zeros((4, 4)), 1 / 50))


def test_config_validation():
    with pytest.raises(ValueError):
        FidelityConfig(levels=())
    with pytest.raises(ValueError):
        FidelityConfig(scale=0)
    with pytest.raises(ValueError):
        build_curvature_current(disc(32), None, [], field_complex(disc(32)))


def test_constant_field_gives_zero_chain():
    f = ScalarField(np.full((40, 40), 0.3), 1 / 39)
    cc = build_curvature_current(f, None, [0.5], field_complex(f, 4))
    assert not np.any(cc.chain.coefficients)


def test_disc_current_mass_is_total_curvature():
    f = disc()
    # routing on coarse cells adds the octagonal-metric excess, so use one-pixel cells
    cc = build_curvature_current(f, None, [0.5], field_complex(f, 1), smoothing=6.0)
    assert cc.unsigned_mass == pytest.approx(2 * np.pi, rel=1e-6)
    assert mass(cc.chain) == pytest.approx(2 * np.pi, rel=0.1)


def test_reflection_symmetry():
    f = disc(96, r=0.2)
    v = f.values.copy()
    v[:, :40] *= 0.5
    a = ScalarField(v, f.spacing)
    b = ScalarField(v[:, ::-1].copy(), f.spacing)
    k = field_complex(a, 4)
    ma = build_curvature_current(a, None, [0.25, 0.5], k)
    mb = build_curvature_current(b, None, [0.25, 0.5], k)
    assert ma.unsigned_mass == pytest.approx(mb.unsigned_mass, rel=1e-6)


def test_f2_identity_and_mismatch():
    f = disc(64)
    cfg = FidelityConfig(complex_cell=8)
    assert f2_flat_fidelity(f, f, cfg) == 0
    with pytest.raises(ValueError):
        f2_flat_fidelity(f, disc(32), cfg)


def test_f2_decomposition_and_chain_reuse():
    f = disc(64, r=0.2)
    g = disc(64, r=0.3)
    cfg = FidelityConfig(complex_cell=8)
    dec = f2_flat_fidelity(f, g, cfg, return_decomposition=True)
    k = field_complex(g, 8)
    gc = build_curvature_current(g, None, cfg.levels, k).chain
    assert f2_flat_fidelity(f, g, cfg, g_chain=gc) == pytest.approx(dec.value, rel=1e-9)
    assert dec.value > 0 and dec.value <= dec.mass_r + dec.mass_t + 1e-9


def test_cusp_displacement_grows_then_saturates():
    # a right-angle corner carries an atom of pi/2; moving it trades transport for cancellation
    k = box_complex((0, 0), (1, 1), 1 / 48)

    def corner_current(dx):
        p = Polyline([[0.2 + dx, 0.5], [0.45 + dx, 0.5], [0.45 + dx, 0.75]])
        return curvature_density(PolylineCurrent([p])).as_current()

    base = rasterize_to_chain(corner_current(0.0), k)
    atom_mass = mass(base)
    vals = []
    for d in (0.02, 0.1, 0.3):
        x = rasterize_to_chain(corner_current(d), k) - base
        vals.append(flat_norm_primal(x, k, 1.0).value)
    assert all(b >= a - 1e-9 for a, b in zip(vals, vals[1:]))
    assert vals[0] < 0.2 * vals[-1]
    assert vals[-1] <= 2 * atom_mass + 1e-9
