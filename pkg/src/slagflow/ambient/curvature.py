"""Riemann curvature of ambient metric fields.

The implementation route assembles the curvature tensor from analytic first
and second metric derivatives (exact for the flat, cylindrical and Calabi
fields; the Calabi field is differentiated in its log chart, where every
coefficient is polynomial in the scale variable).  An independent
finite-difference route with Richardson extrapolation serves as the oracle.
"""

from __future__ import annotations

import numpy as np

from ..errors import ResolutionError
from .base import christoffels_from

__all__ = [
    "riemann_from_derivs",
    "curvature_at",
    "fd_metric_derivs",
    "curvature_norms_fd",
]


def riemann_from_derivs(g, dg, ddg):
    """Fully lowered curvature R_{abcd} plus norms, from g, dg, ddg.

    Index convention: dg[..., a, b, c] = d_c g_ab and
    ddg[..., a, b, c, e] = d_e d_c g_ab.
    Returns (R_lower, |Rm|, Gamma, ginv).
    """
    ginv = np.linalg.inv(g)
    gamma = christoffels_from(g, dg)
    # dGamma^a_{bc,e} = -g^{af} dg_{fh,e} g^{hd} T_dbc/2 + g^{ad} dT_{dbc,e}/2
    t1 = np.einsum("...dcb->...dbc", dg)
    t2 = dg
    t3 = np.einsum("...bcd->...dbc", dg)
    term = t1 + t2 - t3  # T_{dbc} = d_b g_dc + d_c g_db - d_d g_bc
    u1 = np.einsum("...dcbe->...dbce", ddg)   # d_e d_b g_dc
    u2 = ddg                                   # d_e d_c g_db
    u3 = np.einsum("...bcde->...dbce", ddg)   # d_e d_d g_bc
    dterm = u1 + u2 - u3
    dginv = -np.einsum("...af,...fhe,...hd->...ade", ginv, dg, ginv)
    dgamma = 0.5 * (
        np.einsum("...ade,...dbc->...abce", dginv, term)
        + np.einsum("...ad,...dbce->...abce", ginv, dterm)
    )
    # R^a_{bcd} = d_c Gamma^a_{db} - d_d Gamma^a_{cb}
    #             + Gamma^a_{ce} Gamma^e_{db} - Gamma^a_{de} Gamma^e_{cb}
    r_up = (
        np.einsum("...adbc->...abcd", dgamma)
        - np.einsum("...acbd->...abcd", dgamma)
        + np.einsum("...ace,...edb->...abcd", gamma, gamma)
        - np.einsum("...ade,...ecb->...abcd", gamma, gamma)
    )
    r_low = np.einsum("...ae,...ebcd->...abcd", g, r_up)
    norm_sq = np.einsum(
        "...abcd,...efgh,...ae,...bf,...cg,...dh->...",
        r_low, r_low, ginv, ginv, ginv, ginv,
    )
    return r_low, np.sqrt(np.maximum(norm_sq, 0.0)), gamma, ginv


def fd_metric_derivs(metric_fn, p, h):
    """Central finite-difference (dg, ddg) of a metric evaluator at p."""
    p = np.asarray(p, dtype=float)
    d = p.shape[-1]
    single = p.ndim == 1
    pb = p[None, :] if single else p
    nb = pb.shape[0]
    g0 = metric_fn(pb)
    dg = np.zeros((nb, d, d, d))
    ddg = np.zeros((nb, d, d, d, d))
    plus = {}
    minus = {}
    for c in range(d):
        pp = pb.copy(); pp[:, c] += h
        pm = pb.copy(); pm[:, c] -= h
        plus[c] = metric_fn(pp)
        minus[c] = metric_fn(pm)
        dg[..., c] = (plus[c] - minus[c]) / (2 * h)
        ddg[..., c, c] = (plus[c] - 2 * g0 + minus[c]) / h**2
    for c in range(d):
        for e in range(c + 1, d):
            ppp = pb.copy(); ppp[:, c] += h; ppp[:, e] += h
            ppm = pb.copy(); ppm[:, c] += h; ppm[:, e] -= h
            pmp = pb.copy(); pmp[:, c] -= h; pmp[:, e] += h
            pmm = pb.copy(); pmm[:, c] -= h; pmm[:, e] -= h
            mixed = (metric_fn(ppp) - metric_fn(ppm) - metric_fn(pmp) + metric_fn(pmm)) / (4 * h**2)
            ddg[..., c, e] = mixed
            ddg[..., e, c] = mixed
    if single:
        return dg[0], ddg[0]
    return dg, ddg


def curvature_norms_fd(metric_fn, p, h):
    """|Rm| and R_{abcd} by Richardson-extrapolated finite differences."""
    p = np.asarray(p, dtype=float)
    if h < 1e-9:
        raise ResolutionError("finite-difference step underflow near domain boundary")
    g = metric_fn(p)
    d1a, d2a = fd_metric_derivs(metric_fn, p, h)
    d1b, d2b = fd_metric_derivs(metric_fn, p, h / 2)
    dg = (4 * d1b - d1a) / 3.0
    ddg = (4 * d2b - d2a) / 3.0
    r, nrm, _, _ = riemann_from_derivs(g, dg, ddg)
    return r, nrm


def _grad_riemann_norm(field, p_log, g, gamma, ginv, r0, h):
    """|nabla Rm| by differencing the analytic curvature in the log chart."""
    d = p_log.shape[-1]
    nab = np.zeros(r0.shape + (d,))
    for e in range(d):
        pp = p_log.copy(); pp[e] += h
        pm = p_log.copy(); pm[e] -= h
        rp, _, _, _ = riemann_from_derivs(*field.log_chart_metric_derivs(pp))
        rm, _, _, _ = riemann_from_derivs(*field.log_chart_metric_derivs(pm))
        nab[..., e] = (rp - rm) / (2 * h)
    # covariant corrections: nabla_e R_abcd = d_e R_abcd - Gamma^f_{ea} R_fbcd - ...
    corr = (
        np.einsum("fea,fbcd->abcde", gamma, r0)
        + np.einsum("feb,afcd->abcde", gamma, r0)
        + np.einsum("fec,abfd->abcde", gamma, r0)
        + np.einsum("fed,abcf->abcde", gamma, r0)
    )
    nab = nab - corr
    nsq = np.einsum(
        "abcde,fghij,af,bg,ch,di,ej->",
        nab, nab, ginv, ginv, ginv, ginv, ginv,
    )
    return float(np.sqrt(max(nsq, 0.0)))


def curvature_at(field, p, want_grad=False):
    """Full lowered Riemann tensor, |Rm| and optionally |grad Rm| at p.

    For fields with an analytic log chart (Calabi) the computation runs
    there; flat and cylindrical fields return exact zeros; other fields fall
    back to Richardson finite differences of the mesh-chart metric with steps
    scaled to the local coordinate scales.
    """
    p = np.asarray(p, dtype=float)
    kind = getattr(field, "kind", "")
    if kind in ("flat", "cylindrical"):
        d = field.dim
        r = np.zeros((d, d, d, d))
        return (r, 0.0, 0.0) if want_grad else (r, 0.0)
    if hasattr(field, "log_chart_metric_derivs"):
        pl = field.to_log_chart(p)
        g, dg, ddg = field.log_chart_metric_derivs(pl)
        r, nrm, gamma, ginv = riemann_from_derivs(g, dg, ddg)
        if want_grad:
            grad = _grad_riemann_norm(field, pl, g, gamma, ginv, r, 1e-4)
            return r, float(nrm), grad
        return r, float(nrm)
    # generic fallback
    scales = np.asarray(field.coordinate_scales(p), dtype=float)
    h = 1e-4 * float(np.min(scales))
    r, nrm = curvature_norms_fd(field.metric, p, h)
    if want_grad:
        raise NotImplementedError("gradient of Rm requires an analytic chart")
    return r, float(nrm)
