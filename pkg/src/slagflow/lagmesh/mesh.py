"""Periodic structured meshes of immersed Lagrangian tori.

A mesh is a k-dimensional periodic grid of vertices with ambient chart
positions.  Wrapping around a grid direction may apply a transition map of
the ambient cover (a deck transformation or translation); transitions are
isometries of every ambient structure, so finite-difference stencils may be
taken across the wrap after applying them.  Transitions of distinct
directions must commute, which holds for all meshes built here.
"""

from __future__ import annotations

import numpy as np

from ..errors import ConstructionError

__all__ = ["ImmersedLagrangian", "Translation"]


class Translation:
    """Affine transition: p -> p + shift."""

    def __init__(self, shift):
        self.shift = np.asarray(shift, dtype=float)

    def apply(self, pts):
        return np.asarray(pts, dtype=float) + self.shift

    def inverse(self):
        return Translation(-self.shift)


class ImmersedLagrangian:
    """Periodic structured mesh of a Lagrangian torus in ambient coordinates.

    ``positions``: array of shape grid_shape + (d,).
    ``periods``: parameter period per grid direction (spacing = period/m_i).
    ``transitions``: per-direction transition map applied when leaving the
    fundamental window through the + face (None = identity).
    ``h1_basis``: marked loops, label -> array of grid multi-indices.
    ``metadata``: construction tag and builder-specific data (special phase,
    level, slope, ...).
    """

    def __init__(self, positions, periods, transitions=None, h1_basis=None,
                 metadata=None):
        positions = np.asarray(positions, dtype=float)
        if positions.ndim < 2:
            raise ConstructionError("positions must be a grid of points")
        self.positions = positions
        self.k = positions.ndim - 1
        self.shape = positions.shape[:-1]
        self.dim = positions.shape[-1]
        periods = np.asarray(periods, dtype=float)
        if periods.shape != (self.k,):
            raise ConstructionError("one parameter period per grid direction")
        self.periods = periods
        self.spacings = periods / np.asarray(self.shape, dtype=float)
        if transitions is None:
            transitions = [None] * self.k
        if len(transitions) != self.k:
            raise ConstructionError("one transition per grid direction")
        self.transitions = list(transitions)
        self.h1_basis = dict(h1_basis or {})
        self.metadata = dict(metadata or {})

    # -- copies -------------------------------------------------------------
    def copy(self, positions=None):
        return ImmersedLagrangian(
            self.positions.copy() if positions is None else positions,
            self.periods,
            self.transitions,
            {k: np.array(v) for k, v in self.h1_basis.items()},
            dict(self.metadata),
        )

    @property
    def n_vertices(self):
        return int(np.prod(self.shape))

    def flat_positions(self):
        return self.positions.reshape(-1, self.dim)

    def vertex_index(self, multi):
        return int(np.ravel_multi_index(tuple(multi), self.shape))

    # -- padded stencil access ------------------------------------------------
    def padded(self, width=1):
        """Positions padded by ``width`` ghost layers in every direction,
        with transitions applied on the wrapped slabs."""
        arr = self.positions
        for axis in range(self.k):
            trans = self.transitions[axis]
            m = arr.shape[axis]
            lo = [slice(None)] * arr.ndim
            hi = [slice(None)] * arr.ndim
            lo[axis] = slice(0, width)
            hi[axis] = slice(m - width, m)
            top = arr[tuple(lo)]
            bot = arr[tuple(hi)]
            if trans is not None:
                top = trans.apply(top)
                bot = trans.inverse().apply(bot)
            arr = np.concatenate([bot, arr, top], axis=axis)
        return arr

    def loop_positions(self, label):
        path = self.h1_basis[label]
        idx = tuple(np.asarray(path).T)
        return self.positions[idx]
