"""Hyper-Kahler triples, the twistor family of volume forms and rotation.

For a complex-dimension-2 Calabi-Yau structure with omega^2 = (1/2) Omega ^
bar(Omega), the triple (omega_1, omega_2, omega_3) = (Re Omega, omega,
Im Omega) is hyper-Kahler.  The frame's Riemannian metric is the one the
triple itself induces (each omega_i self-dual of equal norm), and the three
complex structures are I_i = g^{-1} omega_i.  Rotation produces the structure
with Kahler form Re Omega and volume form omega - i Im Omega.
"""

from __future__ import annotations

import itertools

import numpy as np

from ..errors import ConstructionError
from .base import MetricField

__all__ = ["HyperKahlerFrame", "frame_at", "twistor_form", "hk_rotate", "RotatedField"]


def _wedge_scalar(a, b):
    """(a ^ b)(e0..e3) for 2-forms on R^4 given as matrices."""
    total = np.zeros(np.broadcast_shapes(a.shape[:-2], b.shape[:-2]))
    for (i, j, k, l), sign in _PERMS4:
        total = total + sign * a[..., i, j] * b[..., k, l]
    return total / 4.0


def _perms4():
    out = []
    for perm in itertools.permutations(range(4)):
        mat = np.zeros((4, 4))
        for r, c in enumerate(perm):
            mat[r, c] = 1.0
        out.append((perm, round(np.linalg.det(mat))))
    return out


_PERMS4 = _perms4()


class HyperKahlerFrame:
    """Pointwise hyper-Kahler data: three 2-forms, induced metric, I, J, K.

    ``scales`` are per-coordinate length scales used to balance the tensors
    before any product is formed; in charts whose coordinates differ by many
    orders of magnitude this keeps the quaternion algebra at full precision.
    """

    def __init__(self, forms, metric, tol=1e-8, scales=None):
        forms = [np.asarray(f, dtype=float) for f in forms]
        metric = np.asarray(metric, dtype=float)
        self.forms = forms
        self.metric = metric
        d = len(metric)
        if scales is None:
            scales = np.ones(d)
        self._d_up = np.asarray(scales, dtype=float)
        self._bal_metric = metric * np.outer(self._d_up, self._d_up)
        self._bal_forms = [f * np.outer(self._d_up, self._d_up) for f in forms]
        ginv = np.linalg.inv(self._bal_metric)
        # omega_i(X, Y) = g(X, I_i Y)  =>  I_i = g^{-1} omega_i; this slot
        # convention orients the triple so that I J K = -1.
        self._bal_structures = [ginv @ f for f in self._bal_forms]
        # unbalance: I_mesh = D I_bal D^{-1}
        self.structures = [
            s * np.outer(self._d_up, 1.0 / self._d_up) for s in self._bal_structures
        ]
        self._tol = tol

    @property
    def omega1(self):
        return self.forms[0]

    @property
    def omega2(self):
        return self.forms[1]

    @property
    def omega3(self):
        return self.forms[2]

    def volume_form(self):
        """dVol scalar on the balanced coordinate 4-frame."""
        tot = 0.0
        for f in self._bal_forms:
            tot = tot + _wedge_scalar(f, f)
        return tot / 6.0

    def quaternion_residual(self):
        i, j, k = self._bal_structures
        eye = np.eye(4)
        res = max(
            np.abs(i @ i + eye).max(),
            np.abs(j @ j + eye).max(),
            np.abs(k @ k + eye).max(),
            np.abs(i @ j @ k + eye).max(),
        )
        return float(res)

    def q_matrix(self):
        """Q_ij with (1/2) omega_i ^ omega_j = Q_ij dVol."""
        dvol = self.volume_form()
        q = np.zeros((3, 3))
        for a in range(3):
            for b in range(3):
                q[a, b] = 0.5 * _wedge_scalar(self._bal_forms[a], self._bal_forms[b]) / dvol
        return q

    def self_dual_residual(self):
        """Max deviation of each form from self-duality w.r.t. the metric."""
        g = self._bal_metric
        ginv = np.linalg.inv(g)
        dvol_coord = np.sqrt(np.linalg.det(g))
        res = 0.0
        eps = np.zeros((4, 4, 4, 4))
        for (i, j, k, l), sign in _PERMS4:
            eps[i, j, k, l] = sign
        for f in self._bal_forms:
            # (star f)_{ab} = (1/2) sqrt(g) eps_{abcd} g^{ce} g^{df} f_{ef}
            star = 0.5 * dvol_coord * np.einsum(
                "abcd,ce,df,ef->ab", eps, ginv, ginv, f
            )
            res = max(res, float(np.abs(star - f).max() / max(np.abs(f).max(), 1e-30)))
        return res

    def validate(self):
        q = self.q_matrix()
        off = q - np.diag(np.diag(q))
        if np.abs(off).max() > 1e-6 * np.abs(np.diag(q)).max():
            raise ConstructionError("triple wedge matrix is not diagonal")
        if np.any(np.diag(q) <= 0):
            raise ConstructionError("triple wedge matrix is not positive")
        if self.quaternion_residual() > self._tol:
            raise ConstructionError("quaternion relations fail")
        return True


def frame_at(field, q):
    """Hyper-Kahler frame of a complex-dimension-2 field at a point.

    The frame's metric is the triple-induced one: the unique metric making
    the triple an orthogonal self-dual frame of equal norm.  For fields whose
    Riemannian metric is omega-compatible it coincides with field.metric.
    """
    q = np.asarray(q, dtype=float)
    if field.complex_dim != 2:
        raise ConstructionError("hyper-Kahler frames need complex dimension 2")
    om = field.kahler(q)
    jmat = field.complex_structure(q)
    eye = np.eye(4)
    vals = {}
    for combo in itertools.combinations(range(4), 2):
        vecs = np.stack([eye[combo[0]], eye[combo[1]]])
        vals[combo] = complex(field.holvol(q, vecs))
    re = np.zeros((4, 4))
    im = np.zeros((4, 4))
    for (a, b), v in vals.items():
        re[a, b], re[b, a] = v.real, -v.real
        im[a, b], im[b, a] = v.imag, -v.imag
    # triple-induced metric: g(X, Y) = omega(X, J Y); with the normalization
    # omega^2 = (1/2) Omega ^ bar(Omega) this makes the triple an equal-norm
    # orthogonal self-dual frame.
    g0 = om @ jmat
    scales = np.asarray(field.coordinate_scales(q), dtype=float)
    return HyperKahlerFrame([re, om, im], g0, scales=scales)


def twistor_form(frame, zeta, q=None):
    """Decomposable twistor family through Omega at zeta = 0.

    Omega_zeta = Omega + 2 zeta omega - zeta^2 bar(Omega) with Omega =
    omega_1 + i omega_3; decomposability Omega_zeta ^ Omega_zeta = 0 holds
    identically for triples normalized as produced by ``frame_at``.
    """
    zeta = complex(zeta)
    om = frame.omega2
    omc = frame.omega1 + 1j * frame.omega3
    return omc + 2.0 * zeta * om - zeta**2 * np.conj(omc)


def twistor_structure(frame, zeta):
    """J_zeta from the Mobius combination of the frame structures."""
    zeta = complex(zeta)
    i_s, j_s, k_s = frame.structures
    denom = 1.0 + abs(zeta) ** 2
    return (
        (1j * (-zeta + np.conj(zeta))).real * i_s
        - (zeta + np.conj(zeta)).real * k_s
        + (1.0 - abs(zeta) ** 2) * j_s
    ) / denom


class RotatedField(MetricField):
    """Hyper-Kahler rotation of an ambient field: omega_I = Re Omega,
    Omega_I = omega - i Im Omega, same triple-induced Riemannian metric."""

    kind = "rotated"

    def __init__(self, base_field, sign=+1):
        if base_field.complex_dim != 2:
            raise ConstructionError("rotation needs complex dimension 2")
        self.base_field = base_field
        self.dim = base_field.dim
        self.complex_dim = 2
        self.sign = sign

    def _frame(self, q):
        return frame_at(self.base_field, q)

    def metric(self, q):
        q = np.asarray(q, dtype=float)
        if q.ndim == 1:
            return self._frame(q).metric
        return np.stack([self._frame(qq).metric for qq in q])

    def kahler(self, q):
        q = np.asarray(q, dtype=float)
        if q.ndim == 1:
            return self._frame(q).omega1 * self.sign
        return np.stack([self._frame(qq).omega1 * self.sign for qq in q])

    def complex_structure(self, q):
        q = np.asarray(q, dtype=float)
        if q.ndim == 1:
            f = self._frame(q)
            return np.linalg.inv(f.metric) @ (f.omega1 * self.sign)
        return np.stack([self.complex_structure(qq) for qq in q])

    def holvol(self, q, vectors):
        q = np.asarray(q, dtype=float)
        vectors = np.asarray(vectors, dtype=float)
        if q.ndim == 1:
            f = self._frame(q)
            comp = f.omega2 - 1j * self.sign * f.omega3
            v1, v2 = vectors[0], vectors[1]
            return v1 @ comp @ v2
        return np.array([
            self.holvol(qq, vv) for qq, vv in zip(q, vectors)
        ])

    def rotate_back(self):
        return self.base_field

    def contains(self, q):
        return self.base_field.contains(q)

    def validate(self, q):
        self.base_field.validate(q)

    def coordinate_scales(self, q):
        return self.base_field.coordinate_scales(q)


def hk_rotate(field):
    """Rotated Calabi-Yau structure (X, g, I) of a complex-surface field."""
    return RotatedField(field)


def holomorphicity_residual(frame_or_field, q, tangents):
    """Norm of the I-anti-invariant part of a tangent 2-plane.

    ``tangents``: (2, d) spanning vectors.  Measured with the triple metric;
    returns ||(1 - P) I P|| for P the orthogonal projector onto the plane.
    """
    frame = frame_or_field if isinstance(frame_or_field, HyperKahlerFrame) else frame_at(
        frame_or_field, q
    )
    g = frame.metric
    i_s = frame.structures[0]
    t = np.asarray(tangents, dtype=float).T  # (d, 2)
    gram = t.T @ g @ t
    proj = t @ np.linalg.inv(gram) @ t.T @ g  # g-orthogonal projector onto span
    a = (np.eye(len(g)) - proj) @ i_s @ proj
    # normalized operator norm w.r.t. g
    val = np.sqrt(max(np.linalg.eigvalsh(a.T @ g @ a @ np.linalg.inv(g)).max(), 0.0))
    return float(val)
