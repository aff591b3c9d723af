"""Meshed Lagrangian tori and discrete bounded-geometry measurement."""

from .mesh import ImmersedLagrangian, Translation
from .build import (
    SlagModelSpec,
    build_circle,
    build_graph_lagrangian,
    build_model_cyl_slag,
    build_model_slag,
)
from .measure import GeometricReport, integral_h2, measure, mesh_geometry
from .noncollapse import ball_volume_profile, edge_graph, noncollapse_check
from .spectral import lambda1, laplace_matrices
from .variation import second_fundamental_variation_check, variation_rhs

__all__ = [
    "GeometricReport",
    "ImmersedLagrangian",
    "SlagModelSpec",
    "Translation",
    "ball_volume_profile",
    "build_circle",
    "build_graph_lagrangian",
    "build_model_cyl_slag",
    "build_model_slag",
    "edge_graph",
    "integral_h2",
    "lambda1",
    "laplace_matrices",
    "measure",
    "mesh_geometry",
    "noncollapse_check",
    "second_fundamental_variation_check",
    "variation_rhs",
]
