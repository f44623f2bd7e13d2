"""Integer curl and divergence matrices on the staggered grid pair.

curl C maps primal edge integrals to primal facet fluxes; the primal
divergence S maps facet fluxes to cell balances (S C = 0 exactly).  The
dual divergence S~ maps dual-facet quantities (indexed by primal edges) to
dual-cell balances (indexed by primal nodes); its negative transpose is the
discrete gradient, so C S~^T = 0 holds in integer arithmetic.

The magnetic scalar potential carries natural (Neumann) boundary treatment,
which leaves a constant null space; one node is pinned to zero so the
reduced gradient has a trivial kernel.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse as sp

from .mesh import FitMesh


def _coo(rows, cols, vals, shape) -> sp.csr_matrix:
    return sp.coo_matrix(
        (np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))),
        shape=shape,
        dtype=np.int64,
    ).tocsr()


def _grid(ri, rj, rk):
    kk, jj, ii = np.meshgrid(np.arange(rk), np.arange(rj), np.arange(ri), indexing="ij")
    return ii.ravel(), jj.ravel(), kk.ravel()


@dataclass(frozen=True)
class DiscreteOperators:
    mesh: FitMesh
    curl: sp.csr_matrix  # facets x edges
    div: sp.csr_matrix  # cells x facets (primal)
    div_dual: sp.csr_matrix  # nodes x edges (S~)
    psi_pin: int

    @cached_property
    def div_dual_reduced(self) -> sp.csr_matrix:
        """S~ with the pinned potential node removed (full row rank)."""
        keep = np.ones(self.mesh.n_nodes, dtype=bool)
        keep[self.psi_pin] = False
        return self.div_dual[keep]

    @cached_property
    def gradient(self) -> sp.csr_matrix:
        """Discrete gradient on the full node set (= -S~^T)."""
        return (-self.div_dual.T).tocsr()

    @property
    def n_psi(self) -> int:
        return self.mesh.n_nodes - 1

    @cached_property
    def interior_edge_mask(self) -> np.ndarray:
        return ~self.mesh.boundary_edge_mask


def build_operators(mesh: FitMesh, psi_pin: int = 0) -> DiscreteOperators:
    nx, ny, nz = mesh.nx, mesh.ny, mesh.nz
    rows, cols, vals = [], [], []

    def add(facets, edges, sign):
        rows.append(np.asarray(facets).ravel())
        cols.append(np.asarray(edges).ravel())
        vals.append(np.full(np.asarray(facets).size, sign, dtype=np.int64))

    # x-facet (i,j,k): +z(i,j+1,k) -z(i,j,k) -y(i,j,k+1) +y(i,j,k)
    i, j, k = _grid(nx + 1, ny, nz)
    f = mesh.facet_id(0, i, j, k)
    add(f, mesh.edge_id(2, i, j + 1, k), +1)
    add(f, mesh.edge_id(2, i, j, k), -1)
    add(f, mesh.edge_id(1, i, j, k + 1), -1)
    add(f, mesh.edge_id(1, i, j, k), +1)
    # y-facet (i,j,k): +x(i,j,k+1) -x(i,j,k) -z(i+1,j,k) +z(i,j,k)
    i, j, k = _grid(nx, ny + 1, nz)
    f = mesh.facet_id(1, i, j, k)
    add(f, mesh.edge_id(0, i, j, k + 1), +1)
    add(f, mesh.edge_id(0, i, j, k), -1)
    add(f, mesh.edge_id(2, i + 1, j, k), -1)
    add(f, mesh.edge_id(2, i, j, k), +1)
    # z-facet (i,j,k): +y(i+1,j,k) -y(i,j,k) -x(i,j+1,k) +x(i,j,k)
    i, j, k = _grid(nx, ny, nz + 1)
    f = mesh.facet_id(2, i, j, k)
    add(f, mesh.edge_id(1, i + 1, j, k), +1)
    add(f, mesh.edge_id(1, i, j, k), -1)
    add(f, mesh.edge_id(0, i, j + 1, k), -1)
    add(f, mesh.edge_id(0, i, j, k), +1)
    curl = _coo(rows, cols, vals, (mesh.n_facets, mesh.n_edges))

    rows, cols, vals = [], [], []
    i, j, k = _grid(nx, ny, nz)
    c = mesh.cell_id(i, j, k)
    for d, (di, dj, dk) in enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1)]):
        rows.append(c)
        cols.append(np.asarray(mesh.facet_id(d, i + di, j + dj, k + dk)).ravel())
        vals.append(np.full(c.size, +1, dtype=np.int64))
        rows.append(c)
        cols.append(np.asarray(mesh.facet_id(d, i, j, k)).ravel())
        vals.append(np.full(c.size, -1, dtype=np.int64))
    div = _coo(rows, cols, vals, (mesh.n_cells, mesh.n_facets))

    en = mesh.edge_nodes
    e_ids = np.arange(mesh.n_edges)
    div_dual = _coo(
        [en[:, 0], en[:, 1]],
        [e_ids, e_ids],
        [np.ones(mesh.n_edges, dtype=np.int64), -np.ones(mesh.n_edges, dtype=np.int64)],
        (mesh.n_nodes, mesh.n_edges),
    )

    if not (0 <= psi_pin < mesh.n_nodes):
        raise ValueError(f"psi_pin {psi_pin} outside node range")
    return DiscreteOperators(mesh, curl, div, div_dual, psi_pin)
