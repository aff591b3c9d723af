"""kappa-non-collapsing checks via shortest-path graph balls.

Distances are Dijkstra shortest paths on the grid-edge graph with induced
edge lengths; ball volumes accumulate the dual cell measures of reached
vertices.  Graph distances overestimate geodesic distances, so the check is
conservative.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp
from scipy.sparse.csgraph import dijkstra

from .measure import mesh_geometry

__all__ = ["edge_graph", "ball_volume_profile", "noncollapse_check"]


def edge_graph(lag, geo):
    """Sparse symmetric graph of grid edges with induced lengths."""
    k = lag.k
    shape = lag.shape
    nverts = int(np.prod(shape))
    tang = geo["tangents"]
    g_amb = geo["g_amb"]
    grids = np.meshgrid(*[np.arange(m) for m in shape], indexing="ij")
    base = np.ravel_multi_index(grids, shape).ravel()
    rows, cols, data = [], [], []
    for ax in range(k):
        nxt = [g.copy() for g in grids]
        nxt[ax] = (nxt[ax] + 1) % shape[ax]
        tgt = np.ravel_multi_index(nxt, shape).ravel()
        # edge length ~ |tangent| * h at the midpoint (average endpoints)
        tl = np.sqrt(np.einsum("...a,...ab,...b->...", tang[..., ax, :], g_amb,
                               tang[..., ax, :]))
        tl_next = np.roll(tl, -1, axis=ax)
        lengths = 0.5 * (tl + tl_next).ravel() * lag.spacings[ax]
        rows.append(base)
        cols.append(tgt)
        data.append(lengths)
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    data = np.concatenate(data)
    graph = sp.coo_matrix((data, (rows, cols)), shape=(nverts, nverts))
    return (graph + graph.T).tocsr()


def ball_volume_profile(lag, geo, radii, basepoints=None):
    """List of (r, min over basepoints of Vol(B(p, r))/r^k)."""
    k = lag.k
    cellvol = float(np.prod(lag.spacings))
    vmeasure = (np.sqrt(geo["detG"]) * cellvol).ravel()
    graph = edge_graph(lag, geo)
    nverts = graph.shape[0]
    if basepoints is None:
        step = max(1, nverts // 16)
        basepoints = list(range(0, nverts, step))
    dists = dijkstra(graph, indices=basepoints)
    out = []
    for r in radii:
        vols = (dists <= r) @ vmeasure
        out.append((float(r), float(np.min(vols) / r**k)))
    return out


def noncollapse_check(field, lag, kappa, r0, n_radii=4, basepoints=None):
    """Pass/fail of Vol(B(p,r)) >= kappa r^k for sampled p and r <= r0.

    Returns (ok, witness) with witness = (vertex index, radius, ratio) of the
    worst violation, or None.
    """
    geo = mesh_geometry(field, lag, need=("G",))
    cellvol = float(np.prod(lag.spacings))
    vmeasure = (np.sqrt(geo["detG"]) * cellvol).ravel()
    graph = edge_graph(lag, geo)
    nverts = graph.shape[0]
    if basepoints is None:
        step = max(1, nverts // 16)
        basepoints = list(range(0, nverts, step))
    dists = dijkstra(graph, indices=basepoints)
    radii = np.linspace(r0 / n_radii, r0, n_radii)
    worst = None
    ok = True
    for r in radii:
        vols = (dists <= r) @ vmeasure
        ratios = vols / (kappa * r**lag.k)
        imin = int(np.argmin(ratios))
        if ratios[imin] < 1.0:
            ok = False
            if worst is None or ratios[imin] < worst[2]:
                worst = (int(basepoints[imin]), float(r), float(ratios[imin]))
    return ok, worst
