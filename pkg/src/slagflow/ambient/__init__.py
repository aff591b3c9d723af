"""Analytic ambient geometries evaluable pointwise with derivatives."""

from .base import (
    MetricField,
    exterior_derivative_residual,
    monge_ampere_residual,
    pfaffian,
)
from .flat import FlatField, FlatTorusCY
from .calabi import CalabiField, CalabiModel, DeckMap
from .cylinder import CylinderField, CylindricalModel
from .synthetic import SyntheticTYField, SyntheticTYPerturbation, synthetic_ty
from .curvature import curvature_at, curvature_norms_fd, riemann_from_derivs
from .hyperkahler import (
    HyperKahlerFrame,
    RotatedField,
    frame_at,
    hk_rotate,
    holomorphicity_residual,
    twistor_form,
    twistor_structure,
)

__all__ = [
    "CalabiField",
    "CalabiModel",
    "CylinderField",
    "CylindricalModel",
    "DeckMap",
    "FlatField",
    "FlatTorusCY",
    "HyperKahlerFrame",
    "MetricField",
    "RotatedField",
    "SyntheticTYField",
    "SyntheticTYPerturbation",
    "curvature_at",
    "curvature_norms_fd",
    "exterior_derivative_residual",
    "frame_at",
    "hk_rotate",
    "holomorphicity_residual",
    "monge_ampere_residual",
    "pfaffian",
    "riemann_from_derivs",
    "synthetic_ty",
    "twistor_form",
    "twistor_structure",
]
