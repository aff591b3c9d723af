"""Builders for model special Lagrangian tori and test Lagrangians."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..ambient.calabi import CalabiModel
from ..ambient.cylinder import CylindricalModel
from ..ambient.flat import FlatTorusCY
from ..errors import ConstructionError
from .mesh import ImmersedLagrangian, Translation

__all__ = [
    "SlagModelSpec",
    "build_model_slag",
    "build_model_cyl_slag",
    "build_graph_lagrangian",
    "build_circle",
]


def _primitive(vec):
    vec = [int(v) for v in vec]
    g = 0
    for v in vec:
        g = math.gcd(g, abs(v))
    return g == 1


@dataclass(frozen=True)
class SlagModelSpec:
    """Model special Lagrangian torus selection.

    ``epsilon``: level of the circle bundle, in (0, 1) (equivalently the
    scale K = (-log eps)^{1/2n}).  ``slope``: primitive integer vector (one
    row per base direction of the torus N) selecting the geodesic class in
    the flat base.  ``resolution``: grid sizes, base directions first, fiber
    circle last.  ``offset``: lattice-coefficient offset of the base torus.
    """

    epsilon: float
    slope: tuple
    resolution: tuple
    offset: tuple = None

    def __post_init__(self):
        if not (0 < self.epsilon < 1):
            raise ConstructionError("epsilon must lie in (0, 1)")
        rows = self.slope_rows()
        for row in rows:
            if not _primitive(row):
                raise ConstructionError(f"slope {tuple(row)} is not primitive")

    def slope_rows(self):
        arr = np.atleast_2d(np.asarray(self.slope, dtype=int))
        return arr

    @property
    def level(self):
        return -math.log(self.epsilon)


def build_model_slag(model: CalabiModel, spec: SlagModelSpec):
    """Mesh of the model special Lagrangian: the circle bundle at level
    |xi|_h^2 = eps restricted to a flat Lagrangian torus N in the base."""
    base = model.base
    m = base.complex_dim
    rows = spec.slope_rows()
    if rows.shape != (m, 2 * m):
        raise ConstructionError(
            f"slope must be {m} primitive row(s) of length {2*m}"
        )
    res = tuple(int(r) for r in spec.resolution)
    if len(res) != m + 1:
        raise ConstructionError("resolution needs base sizes plus fiber size")

    lams = rows @ base.lattice  # (m, 2m) real direction vectors
    # N must be Lagrangian in the base: omega_D restricted to span(lams) = 0
    from ..ambient.flat import standard_j

    om_d = standard_j(m).T @ base.metric_matrix
    for i in range(m):
        for j in range(i + 1, m):
            if abs(lams[i] @ om_d @ lams[j]) > 1e-10:
                raise ConstructionError(
                    "slope rows do not span a Lagrangian torus in the base"
                )

    z0 = np.zeros(2 * m)
    if spec.offset is not None:
        z0 = np.asarray(spec.offset, dtype=float) @ base.lattice

    t_level = spec.level
    n = model.n
    if not (model.ell_min <= t_level ** (1.0 / (2 * n)) <= model.ell_max):
        raise ConstructionError(
            "epsilon level lies outside the model's working annulus"
        )

    # per-direction automorphy twists: constant along N because N is
    # Lagrangian (Im H(lam_i, lam_j) = 0)
    decks = [model.deck_map(rows[i]) for i in range(m)]
    twists = [float(d.twist_phase(z0)) for d in decks]

    # grid parameters: base directions in [0,1), fiber angle in [0, 2 pi)
    grids = [np.arange(res_i) / res_i for res_i in res[:-1]]
    thetas = 2 * math.pi * np.arange(res[-1]) / res[-1]
    mesh_axes = np.meshgrid(*grids, thetas, indexing="ij")
    svals = mesh_axes[:-1]
    thv = mesh_axes[-1]

    z = np.zeros(thv.shape + (2 * m,))
    phase = thv.copy()
    for i in range(m):
        z = z + (svals[i][..., None] - 0.5) * lams[i]
        phase = phase + twists[i] * svals[i]
    z = z + z0
    phi = model.potential(z)
    r = np.exp(0.5 * (phi - t_level))
    w = np.stack([r * np.cos(phase), r * np.sin(phase)], axis=-1)
    positions = np.concatenate([z, w], axis=-1)

    transitions = [decks[i] for i in range(m)] + [None]
    periods = np.array([1.0] * m + [2 * math.pi])

    # marked loops: lifted N rows (one per base direction) and the fiber circle
    h1 = {}
    zero = [0] * (m + 1)
    for i in range(m):
        path = []
        for jj in range(res[i]):
            idx = list(zero)
            idx[i] = jj
            path.append(idx)
        h1[f"base{i}" if m > 1 else "base"] = np.array(path)
    h1["fiber"] = np.array([[0] * m + [jj] for jj in range(res[-1])])

    # special phase: pi/2 composed with the phase of Omega_D along N
    dirs = lams / np.linalg.norm(lams, axis=1, keepdims=True)
    zc = dirs[:, 0::2] + 1j * dirs[:, 1::2]
    base_det = complex(base.holvol_constant) * np.linalg.det(zc)
    phi0 = math.pi / 2 + float(np.angle(base_det))

    meta = {
        "construction": "model-M_eps",
        "special_phase": phi0,
        "epsilon": spec.epsilon,
        "level": t_level,
        "slope": [list(map(int, r_)) for r_ in rows],
        "offset_twists": twists,
    }
    return ImmersedLagrangian(positions, periods, transitions, h1, meta)


def build_model_cyl_slag(model: CylindricalModel, rho, slope, resolution):
    """Product special Lagrangian S^1 x N at cylinder level l = rho."""
    if rho <= 0:
        raise ConstructionError("rho must be positive")
    cross = model.cross_section
    m = cross.complex_dim
    rows = np.atleast_2d(np.asarray(slope, dtype=int))
    if rows.shape != (m, 2 * m):
        raise ConstructionError(f"slope must be {m} row(s) of length {2*m}")
    for row in rows:
        if not _primitive(row):
            raise ConstructionError(f"slope {tuple(row)} is not primitive")
    res = tuple(int(r) for r in resolution)
    if len(res) != m + 1:
        raise ConstructionError("resolution needs circle size plus base sizes")

    lams = rows @ cross.lattice
    from ..ambient.flat import standard_j

    om_d = standard_j(m).T @ cross.metric_matrix
    for i in range(m):
        for j in range(i + 1, m):
            if abs(lams[i] @ om_d @ lams[j]) > 1e-10:
                raise ConstructionError("slope rows are not Lagrangian in the base")

    order = model.isometry_order
    theta_period = 2 * math.pi / order
    # the iota base translation must preserve the N-line: decompose its
    # lattice coefficients along the slope rows modulo the integer lattice
    shear = np.zeros(m)
    if order > 1 and model.iota_translation:
        coeffs = np.asarray(model.iota_translation, dtype=float)
        sol, *_ = np.linalg.lstsq(rows.T.astype(float), coeffs, rcond=None)
        residue = coeffs - sol @ rows
        if np.abs(residue - np.round(residue)).max() > 1e-10:
            raise ConstructionError(
                "iota translation does not preserve the chosen torus class"
            )
        shear = sol

    thetas = theta_period * np.arange(res[0]) / res[0]
    grids = [np.arange(r_) / r_ for r_ in res[1:]]
    axes = np.meshgrid(thetas, *grids, indexing="ij")
    thv = axes[0]
    z = np.zeros(thv.shape + (2 * m,))
    for i in range(m):
        frac = axes[1 + i] + shear[i] * thv / theta_period
        z = z + frac[..., None] * lams[i]
    ell = np.full(thv.shape + (1,), float(rho))
    positions = np.concatenate([ell, thv[..., None], z], axis=-1)

    # the theta coordinate lives on the cover, so the wrap is always a
    # translation: theta advances by the period and the base by the N-line
    # part of the iota translation (lattice parts act trivially)
    theta_shift = np.concatenate([[0.0, theta_period], shear @ lams])
    transitions = [Translation(theta_shift)] + [
        Translation(np.concatenate([[0.0, 0.0], lams[i]])) for i in range(m)
    ]
    periods = np.array([theta_period] + [1.0] * m)

    h1 = {"fiber": np.array([[jj] + [0] * m for jj in range(res[0])])}
    for i in range(m):
        path = []
        for jj in range(res[1 + i]):
            idx = [0] * (m + 1)
            idx[1 + i] = jj
            path.append(idx)
        h1[f"base{i}" if m > 1 else "base"] = np.array(path)

    dirs = lams / np.linalg.norm(lams, axis=1, keepdims=True)
    zc = dirs[:, 0::2] + 1j * dirs[:, 1::2]
    base_det = complex(cross.holvol_constant) * np.linalg.det(zc) * math.sqrt(
        model.n / 2.0
    )
    # Omega = mu (dl + i sqrt(gamma) dtheta) ^ Omega_D restricted to
    # (theta, N): i sqrt(gamma) * Omega_D(N)
    phi0 = float(np.angle(1j * base_det))

    meta = {
        "construction": "model-M_rho",
        "special_phase": phi0,
        "rho": float(rho),
        "slope": [list(map(int, r_)) for r_ in rows],
    }
    return ImmersedLagrangian(positions, periods, transitions, h1, meta)


def build_graph_lagrangian(torus: FlatTorusCY, grad_u, resolution,
                           metadata=None):
    """Gradient-graph Lagrangian {(x, grad u(x))} in a flat torus T^{2n}.

    ``grad_u(x1, .., xm) -> (du_1, .., du_m)`` must be periodic with the
    lattice of the x-slots.  The lattice must be axis-aligned (x and y slots
    split), which holds for the square tori used here.
    """
    m = torus.complex_dim
    res = tuple(int(r) for r in resolution)
    if len(res) != m:
        raise ConstructionError("resolution needs one size per base direction")
    lat = torus.lattice
    # side lengths of the x-slots
    sides = [lat[2 * i, 2 * i] for i in range(m)]
    grids = np.meshgrid(
        *[sides[i] * np.arange(res[i]) / res[i] for i in range(m)],
        indexing="ij",
    )
    du = grad_u(*grids)
    positions = np.zeros(grids[0].shape + (2 * m,))
    for i in range(m):
        positions[..., 2 * i] = grids[i]
        positions[..., 2 * i + 1] = du[i]
    transitions = []
    for i in range(m):
        shift = np.zeros(2 * m)
        shift[2 * i] = sides[i]
        transitions.append(Translation(shift))
    periods = np.array(sides, dtype=float)
    h1 = {}
    for i in range(m):
        path = []
        for jj in range(res[i]):
            idx = [0] * m
            idx[i] = jj
            path.append(idx)
        h1[f"axis{i}"] = np.array(path)
    meta = {"construction": "graph", "special_phase": 0.0}
    meta.update(metadata or {})
    return ImmersedLagrangian(positions, periods, transitions, h1, meta)


def build_circle(radius, resolution, center=(0.0, 0.0)):
    """Round circle in the flat plane (k = 1 diagnostic mesh)."""
    thetas = 2 * math.pi * np.arange(resolution) / resolution
    positions = np.stack(
        [center[0] + radius * np.cos(thetas), center[1] + radius * np.sin(thetas)],
        axis=-1,
    )
    h1 = {"loop": np.array([[j] for j in range(resolution)])}
    return ImmersedLagrangian(
        positions, np.array([2 * math.pi]), [None], h1,
        {"construction": "circle", "radius": float(radius)},
    )
