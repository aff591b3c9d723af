"""Synthetic Tian-Yau-like perturbations of the Calabi model.

The ``radial-shift`` profile pulls the whole Calabi structure back by the
time-one flow of the decaying radial vector field ``c e^{-delta t} d/du``
(``t`` the squared-scale variable, ``u`` the fiber log-radius).  The flow is
explicit,

    Psi(z, w) = (z, w e^{sigma(t)}),
    sigma(t) = -(1/(2 delta)) log(1 - 2 c delta e^{-delta t}),

so the perturbed tensors are exact pullbacks of an exactly Ricci-flat
structure, differ from the model by O(e^{-delta t}) with all derivatives, and
the symplectic discrepancy has the closed-form primitive

    beta = (B(t) - B(t1(t))) (dtheta + J dphi / 2),
    t1(t) = t - 2 sigma(t),  B(t) = t^{1/n},

with d(beta) = Psi^* omega - omega exactly.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..errors import AmplitudeError, ConstructionError
from .base import MetricField
from .calabi import CalabiField, CalabiModel

__all__ = ["SyntheticTYPerturbation", "SyntheticTYField", "synthetic_ty"]


@dataclass(frozen=True)
class SyntheticTYPerturbation:
    """Declared decaying perturbation of a Calabi model.

    ``amplitude`` is the envelope constant (the perturbation obeys
    |nabla^k (g' - g)| <= amplitude * e^{-decay_rate * l0^{2n}} for k <= 2 on
    the working annulus, verified constructively), ``decay_rate`` the rate per
    unit of l0^{2n}.  ``profile`` names the perturbation shape; ``seed`` is
    accepted for interface stability and unused by deterministic profiles.
    """

    amplitude: float
    decay_rate: float
    profile: str = "radial-shift"
    seed: int = 0

    def __post_init__(self):
        if self.decay_rate <= 0:
            raise ConstructionError("decay rate must be positive")
        if self.profile != "radial-shift":
            raise ConstructionError(f"unknown perturbation profile {self.profile!r}")


def synthetic_ty(model: CalabiModel, pert: SyntheticTYPerturbation):
    """Perturbed metric field for the Calabi model, positivity-checked."""
    return SyntheticTYField(model, pert)


class SyntheticTYField(MetricField):
    """Pullback of a Calabi field by the explicit decaying radial shift."""

    kind = "synthetic-TY"
    derivative_order = 2

    def __init__(self, model: CalabiModel, pert: SyntheticTYPerturbation):
        self.model = model
        self.pert = pert
        self.base_field = CalabiField(model)
        self.dim = self.base_field.dim
        self.complex_dim = self.base_field.complex_dim
        self._c = float(pert.amplitude)
        self._delta = float(pert.decay_rate)
        t_lo, t_hi = model.t_bounds
        if 2 * self._c * self._delta * np.exp(-self._delta * t_lo) >= 1.0:
            raise AmplitudeError(
                "perturbation destroys positivity at the inner edge of the "
                f"working annulus (t = {t_lo:.6g})",
                point=t_lo,
            )
        # constructive positivity check on a t-sweep
        for t in np.linspace(t_lo, t_hi, 25):
            q = model.fiber_point(np.zeros(2 * (model.n - 1)), t, 0.3)
            g = self.metric(q)
            if np.any(np.linalg.eigvalsh(g) <= 0):
                raise AmplitudeError(
                    "perturbed metric loses positivity", point=q
                )

    # -- the shift ---------------------------------------------------------
    def _sigma(self, t):
        x = 2.0 * self._c * self._delta * np.exp(-self._delta * t)
        return -np.log1p(-x) / (2.0 * self._delta)

    def _sigma_d1(self, t):
        x = 2.0 * self._c * self._delta * np.exp(-self._delta * t)
        return -0.5 * x / (1.0 - x)

    def _sigma_d2(self, t):
        x = 2.0 * self._c * self._delta * np.exp(-self._delta * t)
        return 0.5 * self._delta * x / (1.0 - x) ** 2

    def t1_of(self, t):
        return t - 2.0 * self._sigma(t)

    def psi(self, q):
        """The underlying diffeomorphism in the mesh chart."""
        q = np.asarray(q, dtype=float)
        m = self.model.n - 1
        t = self.model.t_of(q)
        s = np.exp(self._sigma(t))
        out = q.copy()
        out[..., 2 * m] = q[..., 2 * m] * s
        out[..., 2 * m + 1] = q[..., 2 * m + 1] * s
        return out

    def psi_jacobian(self, q):
        """d Psi as (..., d, d) with rows the output components."""
        q = np.asarray(q, dtype=float)
        m = self.model.n - 1
        d = self.dim
        batch = q.shape[:-1]
        t = self.model.t_of(q)
        s = np.exp(self._sigma(t))
        sp = self._sigma_d1(t)
        _, _, dt, _, _, _ = self.base_field._coframes(q)
        jac = np.zeros(batch + (d, d))
        jac[...] = np.eye(d)
        for wi in (2 * m, 2 * m + 1):
            jac[..., wi, :] = (s * sp * q[..., wi])[..., None] * dt
            jac[..., wi, wi] += s
        return jac

    def psi_jacobian_d1(self, q):
        """d^2 Psi as (..., out, in, e), fully analytic."""
        q = np.asarray(q, dtype=float)
        m = self.model.n - 1
        d = self.dim
        batch = q.shape[:-1]
        t = self.model.t_of(q)
        s = np.exp(self._sigma(t))
        sp = self._sigma_d1(t)
        spp = self._sigma_d2(t)
        _, _, dt, _, _, ddt = self.base_field._coframes(q)
        djac = np.zeros(batch + (d, d, d))
        for wi in (2 * m, 2 * m + 1):
            w_a = q[..., wi]
            # J[wi, c] = s (sp w dt_c + delta_{wi c});  d/d q_e:
            ds = (s * sp)[..., None] * dt  # (..., e)
            term1 = np.einsum("...e,...c->...ce", ds, sp[..., None] * w_a[..., None] * dt)
            term1[..., wi, :] += ds
            term2 = (s * spp * w_a)[..., None, None] * np.einsum(
                "...c,...e->...ce", dt, dt
            )
            term3 = np.zeros(batch + (d, d))
            term3[..., :, wi] = (s * sp)[..., None] * dt
            term4 = (s * sp * w_a)[..., None, None] * ddt
            djac[..., wi, :, :] = term1 + term2 + term3 + term4
        return djac

    # -- pulled-back tensors -------------------------------------------------
    def metric(self, q):
        jac = self.psi_jacobian(q)
        g = self.base_field.metric(self.psi(q))
        return np.einsum("...ca,...cd,...db->...ab", jac, g, jac)

    def kahler(self, q):
        jac = self.psi_jacobian(q)
        om = self.base_field.kahler(self.psi(q))
        return np.einsum("...ca,...cd,...db->...ab", jac, om, jac)

    def complex_structure(self, q):
        jac = self.psi_jacobian(q)
        jinv = np.linalg.inv(jac)
        j = self.base_field.complex_structure(self.psi(q))
        return np.einsum("...ab,...bc,...cd->...ad", jinv, j, jac)

    def holvol(self, q, vectors):
        jac = self.psi_jacobian(q)
        pushed = np.einsum("...ab,...kb->...ka", jac, np.asarray(vectors, dtype=float))
        return self.base_field.holvol(self.psi(q), pushed)

    def metric_d1(self, q):
        """Analytic derivative of the pullback metric (chain rule)."""
        jac = self.psi_jacobian(q)
        djac = self.psi_jacobian_d1(q)
        qq = self.psi(q)
        g = self.base_field.metric(qq)
        dg = self.base_field.metric_d1(qq)
        t1 = np.einsum("...cae,...db,...cd->...abe", djac, jac, g)
        t2 = np.einsum("...ca,...dbe,...cd->...abe", jac, djac, g)
        t3 = np.einsum("...ca,...db,...cdf,...fe->...abe", jac, jac, dg, jac)
        return t1 + t2 + t3

    # -- difference diagnostics ----------------------------------------------
    def metric_difference(self, q):
        """g_pert - g_model, and its model-metric norm, at q."""
        g0 = self.base_field.metric(q)
        diff = self.metric(q) - g0
        ginv = np.linalg.inv(g0)
        nrm = np.sqrt(np.maximum(
            np.einsum("...ab,...cd,...ac,...bd->...", diff, diff, ginv, ginv), 0.0))
        return diff, nrm

    def envelope(self, q, order=0):
        """Decay envelope amplitude * e^{-delta t} * (1 + 2n delta l0^{2n-1} |grad l0|)^k.

        |grad l0| = l0^{-n}/sqrt(n) on the model, so each derivative order
        multiplies the envelope by (1 + 2 sqrt(n) delta t^{(n-1)/2n}).
        """
        n = self.model.n
        t = self.model.t_of(q)
        base = self._c * np.exp(-self._delta * t)
        factor = 1.0 + 2.0 * np.sqrt(n) * self._delta * t ** ((n - 1) / (2.0 * n))
        return base * factor**order

    def beta(self, q):
        """Closed-form Moser primitive with d(beta) = Psi^* omega - omega."""
        n = self.model.n
        t = self.model.t_of(q)
        t1 = self.t1_of(t)
        _, f, _, _, _, _ = self.base_field._coframes(q)
        coef = t ** (1.0 / n) - t1 ** (1.0 / n)
        return coef[..., None] * f

    def contains(self, q):
        return self.base_field.contains(q)

    def validate(self, q):
        self.base_field.validate(q)

    def coordinate_scales(self, q):
        return self.base_field.coordinate_scales(q)

    def scale_function(self, q):
        return self.base_field.scale_function(q)

    def curvature_norm(self, q):
        """|Rm| of the pulled-back metric (= |Rm| of the model at Psi(q))."""
        from .curvature import curvature_at

        _, nrm = curvature_at(self.base_field, self.psi(q))
        return nrm
