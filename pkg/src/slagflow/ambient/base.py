"""Common machinery for ambient geometric structures.

An ambient structure ("metric field") is a chart ``R^d`` together with pure,
batch-vectorized evaluators for the Riemannian metric, the Kahler form, the
complex structure and the holomorphic volume form, plus analytic first (and
where available second) derivatives of the metric.  Points are arrays of
shape ``(d,)`` or ``(N, d)``; tensor results carry the matching batch shape.
"""

from __future__ import annotations

import itertools
import math

import numpy as np

from ..errors import DomainError

__all__ = [
    "MetricField",
    "christoffels_from",
    "exterior_derivative_residual",
    "monge_ampere_residual",
    "pfaffian",
    "wedge_pair_eval",
]


def _as_batch(q):
    q = np.asarray(q, dtype=float)
    if q.ndim == 1:
        return q[None, :], True
    return q, False


def pfaffian(m):
    """Pfaffian of a batch of even-dimensional antisymmetric matrices."""
    m = np.asarray(m)
    d = m.shape[-1]
    if d == 0:
        return np.ones(m.shape[:-2])
    if d % 2:
        return np.zeros(m.shape[:-2])
    if d == 2:
        return m[..., 0, 1]
    total = np.zeros(m.shape[:-2], dtype=m.dtype)
    rest_all = list(range(1, d))
    for pos, j in enumerate(rest_all):
        rest = [k for k in rest_all if k != j]
        sub = m[..., rest, :][..., :, rest]
        total = total + (-1.0) ** pos * m[..., 0, j] * pfaffian(sub)
    return total


def _shuffles(n):
    """(n, n)-shuffles of range(2n) with signs."""
    idx = list(range(2 * n))
    out = []
    for left in itertools.combinations(idx, n):
        right = [i for i in idx if i not in left]
        perm = list(left) + right
        sign = 1
        seen = list(perm)
        for i in range(len(seen)):
            for j in range(i + 1, len(seen)):
                if seen[i] > seen[j]:
                    sign = -sign
        out.append((list(left), right, sign))
    return out


def wedge_pair_eval(n, omega_vals_a, omega_vals_b):
    """(alpha ^ beta)(e_1..e_{2n}) for two n-form value tables.

    ``omega_vals_*`` map an n-tuple of coordinate indices (sorted) to the form
    value; supplied as dicts.  Used for wedges of the holomorphic volume form.
    """
    total = 0.0 + 0.0j
    for left, right, sign in _shuffles(n):
        total += sign * omega_vals_a[tuple(left)] * omega_vals_b[tuple(right)]
    return total


class MetricField:
    """Base class for ambient structures.

    Subclasses implement ``metric``, ``metric_d1``, ``kahler``,
    ``complex_structure`` and ``holvol`` and may override the generic
    helpers.  ``kind`` is one of ``flat | calabi | synthetic-TY |
    cylindrical`` (plus ``rotated`` for hyper-Kahler rotations).
    """

    kind = "abstract"
    dim = 0
    derivative_order = 2
    complex_dim = 0

    # -- evaluators -------------------------------------------------------
    def metric(self, q):
        raise NotImplementedError

    def metric_d1(self, q):
        """d g: shape (..., d, d, d), last index the derivative direction."""
        raise NotImplementedError

    def kahler(self, q):
        raise NotImplementedError

    def complex_structure(self, q):
        raise NotImplementedError

    def holvol(self, q, vectors):
        """Omega(v_1, .., v_n) for ``vectors`` of shape (..., n, d)."""
        raise NotImplementedError

    # -- domain -----------------------------------------------------------
    def contains(self, q):
        q, single = _as_batch(q)
        ok = np.ones(q.shape[0], dtype=bool)
        return ok[0] if single else ok

    def validate(self, q):
        ok = self.contains(q)
        if not np.all(ok):
            bad = np.asarray(q, dtype=float).reshape(-1, self.dim)[~np.atleast_1d(ok)][0]
            raise DomainError(f"point outside working domain: {bad}")

    # -- derived ----------------------------------------------------------
    def christoffels(self, q):
        return christoffels_from(self.metric(q), self.metric_d1(q))

    def coordinate_scales(self, q):
        """Per-coordinate length scales for finite-difference steps."""
        q, single = _as_batch(q)
        s = np.ones_like(q)
        return s[0] if single else s

    def scale_function(self, q):
        """The geometric scale l0 where defined; subclasses override."""
        return None


def christoffels_from(g, dg):
    """Gamma^a_{bc} from metric and its coordinate derivative.

    ``g``: (..., d, d); ``dg``: (..., d, d, d) with dg[..., a, b, c] = d_c g_ab.
    """
    ginv = np.linalg.inv(g)
    # 1/2 g^{ad} (d_b g_dc + d_c g_db - d_d g_bc)
    t1 = np.einsum("...dcb->...dbc", dg)      # d_b g_dc
    t2 = dg                                   # d_c g_db
    t3 = np.einsum("...bcd->...dbc", dg)      # d_d g_bc
    term = t1 + t2 - t3
    return 0.5 * np.einsum("...ad,...dbc->...abc", ginv, term)


def exterior_derivative_residual(field, q, h=1e-5, rng=None, samples=None):
    """Max component of d(kahler form) at ``q`` by central finite differences.

    Steps are scaled by the field's per-coordinate length scales so the check
    is meaningful in charts with widely varying coordinate magnitudes.
    """
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    qb = q[None, :] if single else q
    d = field.dim
    scales = np.atleast_2d(field.coordinate_scales(qb))
    dom = np.zeros(qb.shape[:1] + (d, d, d))
    for c in range(d):
        step = h * scales[:, c]
        qp = qb.copy()
        qm = qb.copy()
        qp[:, c] += step
        qm[:, c] -= step
        dom[:, :, :, c] = (field.kahler(qp) - field.kahler(qm)) / (2 * step)[:, None, None]
    res = np.zeros(qb.shape[0])
    norm = np.zeros(qb.shape[0])
    for a in range(d):
        for b in range(a + 1, d):
            for c in range(b + 1, d):
                comp = dom[:, b, c, a] + dom[:, c, a, b] + dom[:, a, b, c]
                res = np.maximum(res, np.abs(comp))
                norm = np.maximum(norm, np.abs(dom[:, b, c, a]))
    rel = res / np.maximum(norm, 1e-30)
    return rel[0] if single else rel


def monge_ampere_residual(field, q):
    """Relative residual of omega^n - (i^{n^2}/2) Omega ^ bar(Omega) at q."""
    q = np.asarray(q, dtype=float)
    single = q.ndim == 1
    qb = q[None, :] if single else q
    d = field.dim
    n = d // 2
    om = field.kahler(qb)
    lhs = float(math.factorial(n)) * pfaffian(om)
    eye = np.eye(d)
    vals = {}
    for combo in itertools.combinations(range(d), n):
        vecs = np.broadcast_to(eye[list(combo)], (qb.shape[0], n, d))
        vals[combo] = field.holvol(qb, vecs)
    rhs = np.zeros(qb.shape[0], dtype=complex)
    for left, right, sign in _shuffles(n):
        rhs += sign * vals[tuple(left)] * np.conj(vals[tuple(right)])
    rhs = 0.5 * (1j ** (n * n)) * rhs
    rel = np.abs(lhs - rhs) / np.maximum(np.abs(lhs), 1e-30)
    return rel[0] if single else rel
