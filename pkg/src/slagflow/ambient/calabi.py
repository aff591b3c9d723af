"""The Calabi model space: the punctured unit-disk bundle of a polarizing
line bundle over a flat Calabi-Yau torus, with its explicit Ricci-flat
structure.

Mesh chart: ``q = (x_1, y_1, ..., x_m, y_m, Re w, Im w)`` on the universal
cover of the base, where ``w`` is the fiber coordinate in the global frame of
the cover and ``m = n - 1``.  The Hermitian norm is
``|xi|_h^2 = |w|^2 e^{-phi(z)}`` with the quadratic potential
``phi(z) = (1/2) z^dagger P z`` whose curvature form is the base Kahler form.

With ``t = -log|xi|_h^2`` the Riemannian metric is

    g = a(t) [ (drho - dphi/2)^2 + (dtheta + J dphi/2)^2 ] + b(t) g_D,
    a(t) = t^{1/n - 1}/n,   b(t) = t^{1/n},

and the Kahler form is the closed potential form

    omega = A(t) (drho - dphi/2) ^ (dtheta + J dphi/2) + b(t) omega_D,
    A(t) = 2 t^{1/n - 1}/n = 2 b'(t),

which satisfies d(omega) = 0 and omega^n = (i^{n^2}/2) Omega ^ bar(Omega)
exactly.  Analysis operations (curvature) run in the log chart
``(x, y, rho, theta)`` where every coefficient is polynomial in ``t`` and the
coframes have constant derivatives.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..errors import ConstructionError, DomainError
from .base import MetricField
from .flat import FlatTorusCY, real_representation, standard_j

__all__ = ["CalabiModel", "CalabiField", "DeckMap"]


def _pad_base(mat, dim):
    out = np.zeros((dim, dim))
    k = mat.shape[0]
    out[:k, :k] = mat
    return out


@dataclass(frozen=True)
class CalabiModel:
    """Specification of a Calabi model space over a flat torus base.

    ``ell_min``/``ell_max`` bound the working annulus in the scale function
    l0 = t^{1/2n}; evaluation outside raises ``DomainError``, and
    ``|xi|_h >= 1`` (t <= 0) raises with a curvature-sign message.
    """

    total_complex_dim: int
    base: FlatTorusCY
    ell_min: float = 1.2
    ell_max: float = 3.5

    def __post_init__(self):
        n = self.total_complex_dim
        if n < 2:
            raise ConstructionError("total complex dimension must be >= 2")
        if self.base.complex_dim != n - 1:
            raise ConstructionError(
                f"base must have complex dimension {n-1}, got {self.base.complex_dim}"
            )
        if not (0 < self.ell_min < self.ell_max):
            raise ConstructionError("need 0 < ell_min < ell_max")

    @property
    def n(self):
        return self.total_complex_dim

    @property
    def hermitian_curvature(self):
        """Isotropy scalar kappa with phi = kappa |z|^2 when P = 2 kappa I."""
        p = self.base.kahler_matrix
        return float(p[0, 0].real) / 2.0

    @property
    def t_bounds(self):
        expo = 2 * self.n
        return self.ell_min ** expo, self.ell_max ** expo

    def field(self):
        return CalabiField(self)

    def deck_map(self, coeffs):
        """Deck transformation of the cover for an integer lattice vector."""
        coeffs = np.asarray(coeffs, dtype=float)
        lam = coeffs @ self.base.lattice
        return DeckMap(self, lam)

    # -- scalar helpers on the mesh chart ---------------------------------
    def potential(self, z):
        gd = self.base.metric_matrix
        z = np.asarray(z, dtype=float)
        return 0.5 * np.einsum("...a,ab,...b->...", z, gd, z)

    def t_of(self, q):
        q = np.asarray(q, dtype=float)
        m = self.n - 1
        z = q[..., : 2 * m]
        w2 = q[..., 2 * m] ** 2 + q[..., 2 * m + 1] ** 2
        return -np.log(w2) + self.potential(z)

    def scale_function(self, q):
        """l0 = (-log|xi|_h^2)^{1/2n}."""
        t = self.t_of(q)
        return np.power(t, 1.0 / (2 * self.n))

    def fiber_point(self, z, t, theta):
        """Chart point over base point ``z`` at level ``t`` and fiber angle."""
        z = np.asarray(z, dtype=float)
        rho = 0.5 * (self.potential(z) - np.asarray(t, dtype=float))
        r = np.exp(rho)
        w = np.stack([r * np.cos(theta), r * np.sin(theta)], axis=-1)
        return np.concatenate([np.broadcast_to(z, np.shape(w)[:-1] + z.shape[-1:]), w], axis=-1)


class DeckMap:
    """Identification ``(z, w) ~ (z + lam, e_lam(z) w)`` of the cover.

    The factor of automorphy is ``e_lam(z) = exp(H(z,lam)/2 + H(lam,lam)/4)``
    with ``H(u, v) = sum P_jk u_j bar(v)_k``; its modulus is forced by
    invariance of ``|xi|_h`` and the semicharacter is taken trivial.
    """

    def __init__(self, model: CalabiModel, lam):
        self.model = model
        self.lam = np.asarray(lam, dtype=float)
        p = model.base.kahler_matrix
        self._lam_c = self.lam[0::2] + 1j * self.lam[1::2]
        self._p = p
        # H(lam, lam) is real positive
        self._h_ll = float(np.einsum("jk,j,k->", p, self._lam_c, self._lam_c.conj()).real)

    def _factor(self, z):
        zc = z[..., 0::2] + 1j * z[..., 1::2]
        h_zl = np.einsum("jk,...j,k->...", self._p, zc, self._lam_c.conj())
        return np.exp(0.5 * h_zl + 0.25 * self._h_ll)

    def apply(self, q):
        q = np.asarray(q, dtype=float)
        m = self.model.n - 1
        z = q[..., : 2 * m]
        w = q[..., 2 * m] + 1j * q[..., 2 * m + 1]
        fac = self._factor(z)
        w2 = fac * w
        out = q.copy()
        out[..., : 2 * m] = z + self.lam
        out[..., 2 * m] = w2.real
        out[..., 2 * m + 1] = w2.imag
        return out

    def inverse(self):
        inv = DeckMap.__new__(DeckMap)
        inv.model = self.model
        inv.lam = -self.lam
        inv._lam_c = -self._lam_c
        inv._p = self._p
        inv._h_ll = self._h_ll
        return inv

    def twist_phase(self, z):
        """Fiber rotation angle applied by the identification at base point z."""
        zc = np.asarray(z, dtype=float)[..., 0::2] + 1j * np.asarray(z, dtype=float)[..., 1::2]
        h_zl = np.einsum("jk,...j,k->...", self._p, zc, self._lam_c.conj())
        return 0.5 * h_zl.imag


class CalabiField(MetricField):
    """Pointwise evaluators for the Calabi model in the mesh chart."""

    kind = "calabi"
    derivative_order = 3

    def __init__(self, model: CalabiModel):
        self.model = model
        n = model.n
        self.complex_dim = n
        self.dim = 2 * n
        m = n - 1
        self._m = m
        self._gd = _pad_base(model.base.metric_matrix, self.dim)
        self._j = standard_j(n)
        self._omd = self._j.T @ self._gd
        # holomorphic volume constant of the base
        self._c = model.base.holvol_constant

    # -- scalar layers -----------------------------------------------------
    def _split(self, q):
        q = np.asarray(q, dtype=float)
        m = self._m
        return q[..., : 2 * m], q[..., 2 * m :]

    def _t(self, q):
        return self.model.t_of(q)

    def _coef(self, t):
        n = self.model.n
        a = t ** (1.0 / n - 1.0) / n
        b = t ** (1.0 / n)
        da = (1.0 / n) * (1.0 / n - 1.0) * t ** (1.0 / n - 2.0)
        db = (1.0 / n) * t ** (1.0 / n - 1.0)
        return a, b, da, db

    def _coframes(self, q):
        """e, f, dt as (..., d) covector fields plus first derivatives."""
        q = np.asarray(q, dtype=float)
        m = self._m
        d = self.dim
        batch = q.shape[:-1]
        z, w = self._split(q)
        w2 = w[..., 0] ** 2 + w[..., 1] ** 2

        drho = np.zeros(batch + (d,))
        drho[..., 2 * m] = w[..., 0] / w2
        drho[..., 2 * m + 1] = w[..., 1] / w2
        dth = np.zeros(batch + (d,))
        dth[..., 2 * m] = -w[..., 1] / w2
        dth[..., 2 * m + 1] = w[..., 0] / w2

        gd = self._gd
        dphi = np.einsum("ab,...b->...a", gd, np.concatenate(
            [z, np.zeros(batch + (2,))], axis=-1))
        jdphi = np.einsum("ba,...b->...a", self._j, dphi)

        e = drho - 0.5 * dphi
        f = dth + 0.5 * jdphi
        dt = -2.0 * drho + dphi

        # first derivatives d_c (coframe_a): (..., a, c)
        dd_rho = np.zeros(batch + (d, d))
        dd_th = np.zeros(batch + (d, d))
        wi = [2 * m, 2 * m + 1]
        jt = np.array([[0.0, -1.0], [1.0, 0.0]])  # (J w) = (-wim, wre)
        jw = np.einsum("ab,...b->...a", jt, w)
        for ia, a in enumerate(wi):
            for ic, c in enumerate(wi):
                dd_rho[..., a, c] = (np.eye(2)[ia, ic] * w2 - 2 * w[..., ia] * w[..., ic]) / w2 ** 2
                dd_th[..., a, c] = (jt[ia, ic] * w2 - 2 * jw[..., ia] * w[..., ic]) / w2 ** 2
        de = dd_rho - 0.5 * gd
        df = dd_th + 0.5 * (self._j.T @ gd)
        ddt = -2.0 * dd_rho + gd
        return e, f, dt, de, df, ddt

    # -- tensors ------------------------------------------------------------
    def metric(self, q):
        t = self._t(q)
        a, b, _, _ = self._coef(t)
        e, f, _, _, _, _ = self._coframes(q)
        ee = np.einsum("...a,...b->...ab", e, e) + np.einsum("...a,...b->...ab", f, f)
        return a[..., None, None] * ee + b[..., None, None] * self._gd

    def metric_d1(self, q):
        t = self._t(q)
        a, b, da, db = self._coef(t)
        e, f, dt, de, df, _ = self._coframes(q)
        ee = np.einsum("...a,...b->...ab", e, e) + np.einsum("...a,...b->...ab", f, f)
        # d_c (e_a e_b + f_a f_b)
        dee = (
            np.einsum("...ac,...b->...abc", de, e)
            + np.einsum("...a,...bc->...abc", e, de)
            + np.einsum("...ac,...b->...abc", df, f)
            + np.einsum("...a,...bc->...abc", f, df)
        )
        out = (
            da[..., None, None, None] * np.einsum("...ab,...c->...abc", ee, dt)
            + a[..., None, None, None] * dee
            + db[..., None, None, None] * np.einsum("ab,...c->...abc", self._gd, dt)
        )
        return out

    def kahler(self, q):
        t = self._t(q)
        _, b, _, db = self._coef(t)
        biga = 2.0 * db
        e, f, _, _, _, _ = self._coframes(q)
        ef = np.einsum("...a,...b->...ab", e, f) - np.einsum("...a,...b->...ab", f, e)
        return biga[..., None, None] * ef + b[..., None, None] * self._omd

    def complex_structure(self, q):
        q = np.asarray(q, dtype=float)
        shape = q.shape[:-1] + (self.dim, self.dim)
        return np.broadcast_to(self._j, shape).copy()

    def holvol(self, q, vectors):
        """Omega = c_D dz^1 ^ ... ^ dz^m ^ (dw/w) evaluated on n vectors."""
        q = np.asarray(q, dtype=float)
        vectors = np.asarray(vectors, dtype=float)
        m = self._m
        w = q[..., 2 * m] + 1j * q[..., 2 * m + 1]
        zc = vectors[..., 0 : 2 * m : 2] + 1j * vectors[..., 1 : 2 * m : 2]  # (..., n, m)
        dwow = (vectors[..., 2 * m] + 1j * vectors[..., 2 * m + 1]) / w[..., None]
        mat = np.concatenate([zc, dwow[..., None]], axis=-1)  # (..., n, n)
        return self._c * np.linalg.det(mat)

    # -- domain / scales ----------------------------------------------------
    def contains(self, q):
        t = np.atleast_1d(self._t(q))
        t_lo, t_hi = self.model.t_bounds
        ok = (t >= t_lo) & (t <= t_hi)
        return ok[0] if np.asarray(self._t(q)).ndim == 0 else ok

    def validate(self, q):
        t = np.atleast_1d(self._t(q))
        if np.any(~np.isfinite(t)) or np.any(t <= 0):
            raise DomainError(
                "point has |xi|_h >= 1: the potential has the wrong curvature sign there"
            )
        t_lo, t_hi = self.model.t_bounds
        if np.any(t < t_lo) or np.any(t > t_hi):
            raise DomainError(
                f"scale l0 outside working annulus [{self.model.ell_min}, {self.model.ell_max}]"
            )

    def coordinate_scales(self, q):
        q = np.asarray(q, dtype=float)
        single = q.ndim == 1
        qb = q[None, :] if single else q
        m = self._m
        s = np.ones_like(qb)
        r = np.sqrt(qb[..., 2 * m] ** 2 + qb[..., 2 * m + 1] ** 2)
        s[..., 2 * m] = r
        s[..., 2 * m + 1] = r
        return s[0] if single else s

    def scale_function(self, q):
        return self.model.scale_function(q)

    def scale_gradient_sq(self, q):
        """|grad l0^{n+1}|_g^2, analytically (constant on the model)."""
        n = self.model.n
        t = self._t(q)
        _, _, dt, _, _, _ = self._coframes(q)
        g = self.metric(q)
        ginv = np.linalg.inv(g)
        dl = ((n + 1) / (2.0 * n)) * t[..., None] ** ((n + 1) / (2.0 * n) - 1.0) * dt
        return np.einsum("...a,...ab,...b->...", dl, ginv, dl)

    # -- log chart (analysis) ------------------------------------------------
    def to_log_chart(self, q):
        q = np.asarray(q, dtype=float)
        m = self._m
        out = q.copy()
        out[..., 2 * m] = 0.5 * np.log(q[..., 2 * m] ** 2 + q[..., 2 * m + 1] ** 2)
        out[..., 2 * m + 1] = np.arctan2(q[..., 2 * m + 1], q[..., 2 * m])
        return out

    def log_chart_metric_derivs(self, p):
        """(g, dg, ddg) at log-chart points p = (x.., y.., rho, theta)."""
        p = np.asarray(p, dtype=float)
        m = self._m
        d = self.dim
        n = self.model.n
        batch = p.shape[:-1]
        z = p[..., : 2 * m]
        rho = p[..., 2 * m]
        gd = self._gd
        phi = self.model.potential(z)
        t = -2.0 * rho + phi

        a, b, da, db = self._coef(t)
        dda = (1.0 / n) * (1.0 / n - 1.0) * (1.0 / n - 2.0) * t ** (1.0 / n - 3.0)
        ddb = (1.0 / n) * (1.0 / n - 1.0) * t ** (1.0 / n - 2.0)

        zfull = np.concatenate([z, np.zeros(batch + (2,))], axis=-1)
        dphi = np.einsum("ab,...b->...a", gd, zfull)
        jdphi = np.einsum("ba,...b->...a", self._j, dphi)
        e = -0.5 * dphi
        e[..., 2 * m] += 1.0
        f = 0.5 * jdphi
        f[..., 2 * m + 1] += 1.0
        dt = dphi.copy()
        dt[..., 2 * m] += -2.0

        de = np.broadcast_to(-0.5 * gd, batch + (d, d))
        df = np.broadcast_to(0.5 * (self._j.T @ gd), batch + (d, d))
        ddt = np.broadcast_to(gd, batch + (d, d))

        ee = np.einsum("...a,...b->...ab", e, e) + np.einsum("...a,...b->...ab", f, f)
        g = a[..., None, None] * ee + b[..., None, None] * gd

        dee = (
            np.einsum("...ac,...b->...abc", de, e)
            + np.einsum("...a,...bc->...abc", e, de)
            + np.einsum("...ac,...b->...abc", df, f)
            + np.einsum("...a,...bc->...abc", f, df)
        )
        dg = (
            da[..., None, None, None] * np.einsum("...ab,...c->...abc", ee, dt)
            + a[..., None, None, None] * dee
            + db[..., None, None, None] * np.einsum("ab,...c->...abc", gd, dt)
        )

        # second derivative: coframe second derivatives vanish in this chart
        ddee = (
            np.einsum("...ac,...bh->...abch", de, de)
            + np.einsum("...ah,...bc->...abch", de, de)
            + np.einsum("...ac,...bh->...abch", df, df)
            + np.einsum("...ah,...bc->...abch", df, df)
        )
        ddg = (
            dda[..., None, None, None, None]
            * np.einsum("...ab,...c,...h->...abch", ee, dt, dt)
            + da[..., None, None, None, None]
            * (
                np.einsum("...ab,...ch->...abch", ee, ddt)
                + np.einsum("...abc,...h->...abch", dee, dt)
                + np.einsum("...abh,...c->...abch", dee, dt)
            )
            + a[..., None, None, None, None] * ddee
            + ddb[..., None, None, None, None]
            * np.einsum("ab,...c,...h->...abch", gd, dt, dt)
            + db[..., None, None, None, None] * np.einsum("ab,...ch->...abch", gd, ddt)
        )
        return g, dg, ddg
