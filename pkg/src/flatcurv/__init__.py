"""Flat-norm curvature fidelity for image de-noising, built on discrete currents."""

from .complex import Chain, SimplicialComplex2, boundary, box_complex, chain_mass, delaunay_complex, grid_complex
from .currents import (Polyline, PolylineCurrent, SegmentTuple, mass, pushforward_homothety,
                       rasterize_to_chain, to_segment_tuples)
from .field import ScalarField, gradient, hessian, load_pgm, save_pgm
from .fidelity import FidelityConfig, f1_l1, f2_flat_fidelity
from .flatnorm import FlatNormDecomposition, flat_norm_dual, flat_norm_primal
from .lines import CompletionPenalty, complete_lines, lift, maximal_lines, project_direction_mass
from .optimize import (DescentParams, EnergyConfig, EnergyWeights, descend, energy,
                       region_flatnorm_penalty, region_regularity_cost)
from .regularity import (r1_total_curvature, r2_jump_curvature, r3_crease_curvature, r4_graph_mass,
                         r5_hessian_energy)
from .scenes import KINDS, SceneSpec, generate

__version__ = "0.1.0"

__all__ = [
    "Chain",
    "SimplicialComplex2",
    "boundary",
    "box_complex",
    "chain_mass",
    "delaunay_complex",
    "grid_complex",
    "Polyline",
    "PolylineCurrent",
    "SegmentTuple",
    "mass",
    "pushforward_homothety",
    "rasterize_to_chain",
    "to_segment_tuples",
    "ScalarField",
    "gradient",
    "hessian",
    "load_pgm",
    "save_pgm",
    "FidelityConfig",
    "f1_l1",
    "f2_flat_fidelity",
    "FlatNormDecomposition",
    "flat_norm_dual",
    "flat_norm_primal",
    "CompletionPenalty",
    "complete_lines",
    "lift",
    "maximal_lines",
    "project_direction_mass",
    "DescentParams",
    "EnergyConfig",
    "EnergyWeights",
    "descend",
    "energy",
    "region_flatnorm_penalty",
    "region_regularity_cost",
    "r1_total_curvature",
    "r2_jump_curvature",
    "r3_crease_curvature",
    "r4_graph_mass",
    "r5_hessian_energy",
    "KINDS",
    "SceneSpec",
    "generate",
]
