"""Flat norm of 1-chains with scale: the primal decomposition LP and its dual.

For a 1-chain ``x`` on a complex ``K`` and scale ``s > 0``::

    F_s(x) = min  sum_e len_e |r_e| + sum_t (area_t / s) |t_t|
             s.t. x = r + boundary(t)

The dual maximises ``<x, y>`` over edge cochains ``y`` with
``|y_e| <= len_e`` and ``|(d2^T y)_t| <= area_t / s``.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import sparse
from scipy.optimize import linprog

from .complex import Chain, SimplicialComplex2, boundary, chain_mass

LP_TOL = 1e-9


class FlatNormError(RuntimeError):
    pass


@dataclass(frozen=True)
class FlatNormDecomposition:
    value: float
    r_chain: Chain
    t_chain: Chain
    mass_r: float
    mass_t: float
    iterations: int = 0

    @property
    def fill_fraction(self) -> float:
        """Share of the value paid by the 2-chain (0 when nothing is filled)."""
        return self.mass_t / self.value if self.value > 0 else 0.0

    @property
    def keep_fraction(self) -> float:
        return self.mass_r / self.value if self.value > 0 else 0.0


@dataclass(frozen=True)
class DualForm:
    """Optimal dual 1-form: ``phi`` per edge (per unit length), ``dphi`` per triangle."""

    phi: np.ndarray
    dphi: np.ndarray
    value: float


def _check_input(x: Chain, k: SimplicialComplex2, scale: float):
    if x.dim != 1:
        raise ValueError("flat norm is defined here for 1-chains")
    if x.complex is not k:
        raise ValueError("chain does not live on the given complex")
    if not (np.isfinite(scale) and scale > 0):
        raise ValueError(f"scale must be positive, got {scale}")


def _highs_options():
    return {"primal_feasibility_tolerance": LP_TOL,
            "dual_feasibility_tolerance": LP_TOL,
            "presolve": True}


def flat_norm_primal(x: Chain, k: SimplicialComplex2 | None = None,
                     scale: float = 1.0) -> FlatNormDecomposition:
    """Solve the decomposition LP; returns the value and witness chains."""
    k = x.complex if k is None else k
    _check_input(x, k, scale)
    E, T = k.n_edges, k.n_triangles
    if not np.any(x.coefficients):
        z1, z2 = Chain.zeros(k, 1), Chain.zeros(k, 2)
        return FlatNormDecomposition(0.0, z1, z2, 0.0, 0.0)
    w = k.tri_areas / scale
    cost = np.concatenate([k.edge_lengths, k.edge_lengths, w, w])
    I = sparse.identity(E, format="csr")
    A_eq = sparse.hstack([I, -I, k.d2, -k.d2], format="csc")
    res = linprog(cost, A_eq=A_eq, b_eq=x.coefficients, bounds=(0, None),
                  method="highs", options=_highs_options())
    if res.status != 0:
        raise FlatNormError(f"flat norm LP failed after {res.nit} iterations: {res.message}")
    z = res.x
    r = z[:E] - z[E:2 * E]
    t = z[2 * E:2 * E + T] - z[2 * E + T:]
    # clean solver dust; r is recomputed so that x = r + dt holds to rounding
    t[np.abs(t) < 1e-12] = 0.0
    t_chain = Chain(k, 2, t)
    r = x.coefficients - boundary(t_chain).coefficients
    r[np.abs(r) < 1e-12] = 0.0
    r_chain = Chain(k, 1, r)
    mr = chain_mass(r_chain)
    mt = chain_mass(t_chain) / scale
    return FlatNormDecomposition(mr + mt, r_chain, t_chain, mr, mt, int(res.nit))


def flat_norm_dual(x: Chain, k: SimplicialComplex2 | None = None, scale: float = 1.0,
                   return_form: bool = False):
    """Maximise ``x(phi)`` under the comass constraints ``|phi| <= 1``, ``|dphi| <= 1/scale``."""
    k = x.complex if k is None else k
    _check_input(x, k, scale)
    if not np.any(x.coefficients):
        form = DualForm(np.zeros(k.n_edges), np.zeros(k.n_triangles), 0.0)
        return form if return_form else 0.0
    w = k.tri_areas / scale
    D2T = k.d2.T.tocsr()
    A_ub = sparse.vstack([D2T, -D2T], format="csc")
    b_ub = np.concatenate([w, w])
    bounds = np.stack([-k.edge_lengths, k.edge_lengths], axis=1)
    res = linprog(-x.coefficients, A_ub=A_ub, b_ub=b_ub, bounds=bounds,
                  method="highs", options=_highs_options())
    if res.status != 0:
        raise FlatNormError(f"dual flat norm LP failed after {res.nit} iterations: {res.message}")
    y = res.x
    value = float(x.coefficients @ y)
    if not return_form:
        return value
    return DualForm(y / k.edge_lengths, (D2T @ y) / k.tri_areas, value)
