"""Cylindrical model ends: R_+ x (S^1 x D)/iota with the exact product metric.

Chart ``q = (l, theta, x_1, y_1, ..., x_m, y_m)`` on the cover, with the flat
product metric ``dl^2 + gamma dtheta^2 + g_D``, Kahler form
``omega = sqrt(gamma) dl ^ dtheta + omega_D`` and holomorphic volume form
``Omega = (dl + i sqrt(gamma) dtheta) ^ Omega_D``.  The finite-order isometry
``iota`` acts by ``theta -> theta + 2 pi / m`` combined with a lattice-fraction
translation of the base; all structures are exactly invariant.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConstructionError, DomainError
from .base import MetricField
from .flat import FlatTorusCY, standard_j

__all__ = ["CylindricalModel", "CylinderField"]


@dataclass(frozen=True)
class CylindricalModel:
    """Cross-section data for an exact cylindrical Calabi-Yau model end.

    ``gamma`` is the squared length scale of the circle factor (the metric is
    gamma dtheta^2 on theta in [0, 2 pi)); ``isometry_order`` the order of the
    quotient isometry; ``iota_translation`` the base translation it applies,
    given as lattice coefficients.
    """

    cross_section: FlatTorusCY
    gamma: float = 1.0
    isometry_order: int = 1
    iota_translation: tuple = ()

    def __post_init__(self):
        if self.gamma <= 0:
            raise ConstructionError("gamma must be positive")
        if self.isometry_order < 1:
            raise ConstructionError("isometry order must be >= 1")
        if self.iota_translation:
            if len(self.iota_translation) != 2 * self.cross_section.complex_dim:
                raise ConstructionError("iota translation has wrong length")

    @property
    def n(self):
        return self.cross_section.complex_dim + 1

    def field(self):
        return CylinderField(self)

    def iota_shift(self):
        """Cover translation realizing one application of iota."""
        m = self.cross_section.complex_dim
        shift = np.zeros(2 * self.n)
        shift[1] = 2.0 * math.pi / self.isometry_order
        if self.iota_translation:
            shift[2:] = np.asarray(self.iota_translation, float) @ self.cross_section.lattice
        return shift


class CylinderField(MetricField):
    kind = "cylindrical"
    derivative_order = np.inf

    def __init__(self, model: CylindricalModel):
        self.model = model
        m = model.cross_section.complex_dim
        self.complex_dim = m + 1
        self.dim = 2 * (m + 1)
        g = np.zeros((self.dim, self.dim))
        g[0, 0] = 1.0
        g[1, 1] = model.gamma
        g[2:, 2:] = model.cross_section.metric_matrix
        self._g = g
        # complex structure: J dl = dtheta-direction scaled so J^2 = -1 with
        # holomorphic coordinate l + i sqrt(gamma) theta
        j = np.zeros((self.dim, self.dim))
        rg = math.sqrt(model.gamma)
        j[1, 0] = 1.0 / rg
        j[0, 1] = -rg
        j[2:, 2:] = standard_j(m)
        self._j = j
        self._om = j.T @ g
        # the n/2 factor keeps the pointwise identity
        # omega^n = (i^{n^2}/2) Omega ^ bar(Omega) exact in every dimension
        self._c_base = model.cross_section.holvol_constant * math.sqrt(self.complex_dim / 2.0)
        self._rg = rg

    def metric(self, q):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(self._g, q.shape[:-1] + (self.dim,) * 2).copy()

    def metric_d1(self, q):
        q = np.asarray(q, dtype=float)
        return np.zeros(q.shape[:-1] + (self.dim,) * 3)

    def kahler(self, q):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(self._om, q.shape[:-1] + (self.dim,) * 2).copy()

    def complex_structure(self, q):
        q = np.asarray(q, dtype=float)
        return np.broadcast_to(self._j, q.shape[:-1] + (self.dim,) * 2).copy()

    def holvol(self, q, vectors):
        vectors = np.asarray(vectors, dtype=float)
        first = vectors[..., 0] + 1j * self._rg * vectors[..., 1]
        zc = vectors[..., 2::2] + 1j * vectors[..., 3::2]
        mat = np.concatenate([first[..., None], zc], axis=-1)
        return self._c_base * np.linalg.det(mat)

    def christoffels(self, q):
        q = np.asarray(q, dtype=float)
        return np.zeros(q.shape[:-1] + (self.dim,) * 3)

    def contains(self, q):
        q = np.asarray(q, dtype=float)
        ell = np.atleast_1d(q[..., 0])
        ok = ell > 0
        return ok[0] if q.ndim == 1 else ok

    def validate(self, q):
        if not np.all(self.contains(q)):
            raise DomainError("cylindrical coordinate l must be positive")

    def scale_function(self, q):
        q = np.asarray(q, dtype=float)
        return q[..., 0]
