"""Flat Kahler torus structures.

Coordinates are interleaved real coordinates ``(x_1, y_1, ..., x_m, y_m)`` on
the universal cover, with ``z_j = x_j + i y_j``.  The complex structure is the
standard block one, the metric is the real representation of the Hermitian
matrix defining the Kahler form, and the holomorphic volume form is a constant
multiple of ``dz_1 ^ ... ^ dz_m`` whose modulus is fixed by the pointwise
normalization ``omega^m = (1/2) i^{m^2} Omega ^ bar(Omega)``.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from ..errors import ConstructionError
from .base import MetricField

__all__ = ["FlatTorusCY", "FlatField", "standard_j", "real_representation"]


def standard_j(m):
    """Block complex-structure matrix on interleaved coordinates."""
    j = np.zeros((2 * m, 2 * m))
    for k in range(m):
        j[2 * k + 1, 2 * k] = 1.0
        j[2 * k, 2 * k + 1] = -1.0
    return j


def real_representation(p):
    """Real 2m x 2m representation of a Hermitian m x m matrix."""
    p = np.asarray(p, dtype=complex)
    m = p.shape[0]
    out = np.zeros((2 * m, 2 * m))
    for j in range(m):
        for k in range(m):
            out[2 * j, 2 * k] = p[j, k].real
            out[2 * j + 1, 2 * k + 1] = p[j, k].real
            out[2 * j, 2 * k + 1] = -p[j, k].imag
            out[2 * j + 1, 2 * k] = p[j, k].imag
    return out


@dataclass(frozen=True)
class FlatTorusCY:
    """A flat complex torus with a constant Kahler structure.

    ``lattice`` holds the 2m real generators as rows, in interleaved
    coordinates on the cover.  ``kahler_matrix`` is the positive Hermitian
    matrix P with omega = (i/2) sum P_jk dz^j ^ dbar z^k; ``holvol_phase``
    is the unit complex number fixing the phase of Omega.
    """

    complex_dim: int
    lattice: np.ndarray
    kahler_matrix: np.ndarray
    holvol_phase: complex = 1.0 + 0.0j

    def __post_init__(self):
        m = self.complex_dim
        lat = np.asarray(self.lattice, dtype=float)
        p = np.asarray(self.kahler_matrix, dtype=complex)
        if lat.shape != (2 * m, 2 * m):
            raise ConstructionError(f"lattice must be {2*m}x{2*m}, got {lat.shape}")
        if abs(np.linalg.det(lat)) < 1e-12:
            raise ConstructionError("lattice generators are linearly dependent")
        if p.shape != (m, m) or not np.allclose(p, p.conj().T, atol=1e-12):
            raise ConstructionError("kahler_matrix must be Hermitian")
        if np.any(np.linalg.eigvalsh(p) <= 0):
            raise ConstructionError("kahler_matrix must be positive definite")
        if abs(abs(complex(self.holvol_phase)) - 1.0) > 1e-12:
            raise ConstructionError("holvol_phase must be unimodular")
        object.__setattr__(self, "lattice", lat)
        object.__setattr__(self, "kahler_matrix", p)

    @staticmethod
    def square(side, m=1, phase=1.0 + 0.0j, kahler_matrix=None):
        """Square torus of the given side in every real direction."""
        lat = side * np.eye(2 * m)
        p = np.eye(m) if kahler_matrix is None else kahler_matrix
        return FlatTorusCY(m, lat, p, phase)

    @property
    def metric_matrix(self):
        return real_representation(self.kahler_matrix)

    @property
    def holvol_constant(self):
        m = self.complex_dim
        det_p = float(np.linalg.det(self.kahler_matrix).real)
        mod = math.sqrt(math.factorial(m) * det_p / 2.0 ** (m - 1))
        return complex(self.holvol_phase) * mod

    def volume(self):
        """Riemannian volume of the torus."""
        g = self.metric_matrix
        lat = self.lattice
        return float(abs(np.linalg.det(lat)) * math.sqrt(np.linalg.det(g)))

    def field(self):
        return FlatField(self)

    def potential_hessian(self):
        """Hessian of the local Kahler potential phi with i ddbar phi = omega."""
        return self.metric_matrix


class FlatField(MetricField):
    """Constant evaluators for a flat torus used as an ambient space."""

    kind = "flat"
    derivative_order = np.inf

    def __init__(self, torus: FlatTorusCY):
        self.torus = torus
        m = torus.complex_dim
        self.complex_dim = m
        self.dim = 2 * m
        self._g = torus.metric_matrix
        self._j = standard_j(m)
        self._om = self._j.T @ self._g
        self._c = torus.holvol_constant

    def metric(self, q):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1] + (self.dim, self.dim)
        return np.broadcast_to(self._g, shape).copy()

    def metric_d1(self, q):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1] + (self.dim,) * 3
        return np.zeros(shape)

    def kahler(self, q):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1] + (self.dim, self.dim)
        return np.broadcast_to(self._om, shape).copy()

    def complex_structure(self, q):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1] + (self.dim, self.dim)
        return np.broadcast_to(self._j, shape).copy()

    def holvol(self, q, vectors):
        vectors = np.asarray(vectors, dtype=float)
        zcomp = vectors[..., 0::2] + 1j * vectors[..., 1::2]
        return self._c * np.linalg.det(zcomp)

    def christoffels(self, q):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1] + (self.dim,) * 3
        return np.zeros(shape)
