"""First Laplace-Beltrami eigenvalue on periodic structured meshes.

Multilinear finite elements on the parameter torus with a per-cell constant
induced metric: stiffness K_ab = int sqrt(G) G^{ij} dN_a dN_b, consistent
mass M_ab = sqrt(G) int N_a N_b.  Constants lie in the kernel of K exactly;
the smallest nonzero generalized eigenvalue is found by shift-invert Lanczos
with a small negative shift (which deflates the constant mode).
"""

from __future__ import annotations

import itertools

import numpy as np
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from ..errors import NumericError

__all__ = ["laplace_matrices", "lambda1", "lambda1_report"]


def _reference_tables(k):
    """Gauss-point basis values and gradients on the reference k-cube."""
    gp = np.array([0.5 - 0.5 / np.sqrt(3.0), 0.5 + 0.5 / np.sqrt(3.0)])
    corners = list(itertools.product((0, 1), repeat=k))
    qpts = list(itertools.product(range(2), repeat=k))
    nq = len(qpts)
    nc = len(corners)
    vals = np.zeros((nq, nc))
    grads = np.zeros((nq, nc, k))
    for qi, qidx in enumerate(qpts):
        xi = gp[list(qidx)]
        for ci, corner in enumerate(corners):
            phi = 1.0
            for ax in range(k):
                phi *= xi[ax] if corner[ax] else (1.0 - xi[ax])
            vals[qi, ci] = phi
            for ax in range(k):
                dphi = 1.0
                for bx in range(k):
                    if bx == ax:
                        dphi *= 1.0 if corner[bx] else -1.0
                    else:
                        dphi *= xi[bx] if corner[bx] else (1.0 - xi[bx])
                grads[qi, ci, ax] = dphi
    weights = np.full(nq, 1.0 / nq)
    return np.array(corners), vals, grads, weights


def laplace_matrices(lag, gram):
    """Assemble (K, M) sparse matrices from the vertex induced metrics."""
    k = lag.k
    shape = lag.shape
    hs = lag.spacings
    nverts = int(np.prod(shape))
    corners, vals, grads, weights = _reference_tables(k)
    ncorn = len(corners)

    # per-cell metric: average of corner vertex metrics
    gcell = np.zeros(shape + (k, k))
    for corner in corners:
        gcell += np.roll(
            gram, shift=[-c for c in corner], axis=tuple(range(k))
        )
    gcell /= ncorn
    ginv = np.linalg.inv(gcell)
    sqrtg = np.sqrt(np.linalg.det(gcell))
    cellvol = float(np.prod(hs))

    # physical gradients: dN/dx_i = dN/dxi_i / h_i
    scale = 1.0 / hs
    # K_cell[a,b] = cellvol * sum_q w_q (gradN_a * scale) . (sqrtg ginv) . (gradN_b * scale)
    gq = grads * scale[None, None, :]
    kcell = np.einsum(
        "q,qai,...ij,qbj->...ab", weights, gq, ginv, gq
    ) * (sqrtg[..., None, None] * cellvol)
    # consistent mass: tensor-product exact integrals
    m1 = np.array([[1.0 / 3.0, 1.0 / 6.0], [1.0 / 6.0, 1.0 / 3.0]])
    mref = np.ones((ncorn, ncorn))
    for ax in range(k):
        block = np.empty((ncorn, ncorn))
        for a, ca in enumerate(corners):
            for b, cb in enumerate(corners):
                block[a, b] = m1[ca[ax], cb[ax]]
        mref *= block
    mcell = sqrtg[..., None, None] * mref * cellvol

    # global indices of cell corners
    grids = np.meshgrid(*[np.arange(m) for m in shape], indexing="ij")
    cidx = []
    for corner in corners:
        rolled = [
            (grids[ax] + corner[ax]) % shape[ax] for ax in range(k)
        ]
        cidx.append(np.ravel_multi_index(rolled, shape).ravel())
    cidx = np.array(cidx)  # (ncorn, ncells)

    rows, cols, kdata, mdata = [], [], [], []
    kflat = kcell.reshape(-1, ncorn, ncorn)
    mflat = mcell.reshape(-1, ncorn, ncorn)
    for a in range(ncorn):
        for b in range(ncorn):
            rows.append(cidx[a])
            cols.append(cidx[b])
            kdata.append(kflat[:, a, b])
            mdata.append(mflat[:, a, b])
    rows = np.concatenate(rows)
    cols = np.concatenate(cols)
    kmat = sp.coo_matrix(
        (np.concatenate(kdata), (rows, cols)), shape=(nverts, nverts)
    ).tocsr()
    mmat = sp.coo_matrix(
        (np.concatenate(mdata), (rows, cols)), shape=(nverts, nverts)
    ).tocsr()
    kmat = 0.5 * (kmat + kmat.T)
    mmat = 0.5 * (mmat + mmat.T)
    return kmat, mmat


def lambda1(lag, gram, tol=1e-9, n_eigs=4):
    """Smallest nonzero generalized eigenvalue of (K, M)."""
    kmat, mmat = laplace_matrices(lag, gram)
    scale = kmat.diagonal().mean() / mmat.diagonal().mean()
    sigma = -1e-3 * scale
    try:
        vals = spla.eigsh(
            kmat, k=min(n_eigs, kmat.shape[0] - 2), M=mmat, sigma=sigma,
            which="LM", tol=tol, return_eigenvectors=False,
        )
    except Exception as exc:  # ARPACK failures carry diagnostics
        raise NumericError(f"eigenvalue solve failed: {exc}") from exc
    vals = np.sort(np.real(vals))
    # first eigenvalue is the constant mode at ~0
    floor = max(1e-10 * scale, 1e-14)
    nonzero = vals[vals > floor]
    if len(nonzero) == 0:
        raise NumericError("no nonzero eigenvalue found")
    if vals[0] > floor:
        # constant mode missing: assembly inconsistent
        raise NumericError(
            f"kernel mode not found (smallest eigenvalue {vals[0]:.3e})"
        )
    return float(nonzero[0])


def lambda1_report(lag, gram, tol=1e-9):
    kmat, mmat = laplace_matrices(lag, gram)
    ones = np.ones(kmat.shape[0])
    kernel_residual = float(np.abs(kmat @ ones).max())
    return lambda1(lag, gram, tol=tol), kernel_residual
