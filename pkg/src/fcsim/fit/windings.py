"""Stranded-conductor winding functions on the staggered grid pair.

A coil is a closed rectangular racetrack of cells circulating about the z
axis: a window box (possibly degenerate) surrounded by a ramp of width w in
cells, extruded over the cell layers [z0, z1).  Both discrete winding
quantities derive from the same membrane profile g (1 inside the window,
linear ramp to 0 across the coil, Chebyshev distance so corners close):

* Y_s (edge-indexed) samples the membrane potential zeta = (N/h) g z_hat on
  primal z-edges, so the facet source current j_s = C Y_s is exactly
  divergence-free and carries N ampere-turns through any leg cross-section.
* X_s (edge-indexed, i.e. dual-facet currents) is the dual curl C^T of the
  same profile sampled on dual z-edges, making the dual divergence of X_s
  vanish identically as well.

Coil supports live on the in-plane edges of the extruded ramp; the builder
reports the support cells so conductor/coil disjointness can be enforced.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .mesh import FitMesh
from .operators import DiscreteOperators


@dataclass(frozen=True)
class CoilSpec:
    """window: node-coordinate box (wx0, wy0, wx1, wy1); z0/z1: cell layers;
    width: ramp thickness in cells; turns: ampere-turn scale."""

    window: tuple[float, float, float, float]
    z0: int
    z1: int
    width: float
    turns: float

    def validate(self, mesh: FitMesh) -> None:
        wx0, wy0, wx1, wy1 = self.window
        if self.turns <= 0:
            raise ValueError("coil turns must be positive")
        if self.width <= 0:
            raise ValueError("coil ramp width must be positive")
        if not (0 <= self.z0 < self.z1 <= mesh.nz):
            raise ValueError(f"coil z range [{self.z0},{self.z1}) outside mesh")
        if not (wx0 <= wx1 and wy0 <= wy1):
            raise ValueError("coil window box is inverted")
        if not (0 <= wx0 and wx1 <= mesh.nx and 0 <= wy0 and wy1 <= mesh.ny):
            raise ValueError("coil window outside the mesh cross-section")


@dataclass(frozen=True)
class WindingFunctions:
    x_s: np.ndarray  # (n_edges, n_s) dual-facet source currents
    y_s: np.ndarray  # (n_edges, n_s) source field line integrals
    j_s: np.ndarray  # (n_facets, n_s) primal facet source currents = C y_s
    coil_cells: tuple[np.ndarray, ...]  # bool cell masks, one per coil

    @property
    def n_coils(self) -> int:
        return self.x_s.shape[1]


def _node_profile(mesh: FitMesh, coil: CoilSpec) -> np.ndarray:
    """Membrane profile g at in-plane node positions, shape (ny+1, nx+1)."""
    wx0, wy0, wx1, wy1 = coil.window
    jj, ii = np.meshgrid(np.arange(mesh.ny + 1), np.arange(mesh.nx + 1), indexing="ij")
    dist = np.maximum.reduce([wx0 - ii, ii - wx1, wy0 - jj, jj - wy1, np.zeros_like(ii, float)])
    return np.clip(1.0 - dist / coil.width, 0.0, 1.0)


def _cell_profile(mesh: FitMesh, coil: CoilSpec) -> np.ndarray:
    """Membrane profile at in-plane cell centers, shape (ny, nx)."""
    wx0, wy0, wx1, wy1 = coil.window
    jj, ii = np.meshgrid(np.arange(mesh.ny) + 0.5, np.arange(mesh.nx) + 0.5, indexing="ij")
    dist = np.maximum.reduce([wx0 - ii, ii - wx1, wy0 - jj, jj - wy1, np.zeros_like(ii)])
    return np.clip(1.0 - dist / coil.width, 0.0, 1.0)


def _coil_cell_mask(mesh: FitMesh, coil: CoilSpec, g_node: np.ndarray) -> np.ndarray:
    """Cells whose corner profile values differ (the winding support region)."""
    corners = np.stack(
        [g_node[:-1, :-1], g_node[:-1, 1:], g_node[1:, :-1], g_node[1:, 1:]]
    )
    varies = corners.max(axis=0) - corners.min(axis=0) > 1e-12
    mask3 = np.zeros((mesh.nz, mesh.ny, mesh.nx), dtype=bool)
    mask3[coil.z0 : coil.z1] = varies[None, :, :]
    return mask3.reshape(-1)


def build_windings(
    mesh: FitMesh, ops: DiscreteOperators, coils: list[CoilSpec], conducting: np.ndarray | None = None
) -> WindingFunctions:
    """Build X_s, Y_s, j_s for all coils; validates disjointness.

    Raises ValueError when a coil overlaps the conducting region or another
    coil, or when a coil specification does not close inside the mesh.
    """
    n_s = len(coils)
    x_s = np.zeros((mesh.n_edges, n_s))
    y_s = np.zeros((mesh.n_edges, n_s))
    masks = []

    for r, coil in enumerate(coils):
        coil.validate(mesh)
        g_node = _node_profile(mesh, coil)
        g_cell = _cell_profile(mesh, coil)
        height = (coil.z1 - coil.z0) * mesh.dz
        scale = coil.turns / height

        # Y_s: z-edges inside the coil layers, value (N/h) g dz
        jj, ii = np.meshgrid(np.arange(mesh.ny + 1), np.arange(mesh.nx + 1), indexing="ij")
        nonzero = g_node > 0
        for k in range(coil.z0, coil.z1):
            e = mesh.edge_id(2, ii[nonzero], jj[nonzero], k)
            y_s[e, r] = scale * g_node[nonzero] * mesh.dz

        # X_s = C^T Z with Z the profile on dual z-edges (z-facet indexed)
        z = np.zeros(mesh.n_facets)
        zlo, zhi = coil.z0 * mesh.dz, coil.z1 * mesh.dz
        jj_c, ii_c = np.meshgrid(np.arange(mesh.ny), np.arange(mesh.nx), indexing="ij")
        nz_c = g_cell > 0
        for k in range(mesh.nz + 1):
            lo = max((k - 0.5) * mesh.dz, 0.0)
            hi = min((k + 0.5) * mesh.dz, mesh.nz * mesh.dz)
            overlap = max(0.0, min(hi, zhi) - max(lo, zlo))
            if overlap == 0.0:
                continue
            f = mesh.facet_id(2, ii_c[nz_c], jj_c[nz_c], k)
            z[f] = scale * g_cell[nz_c] * overlap
        x_s[:, r] = ops.curl.T @ z

        masks.append(_coil_cell_mask(mesh, coil, g_node))

    for r in range(n_s):
        for q in range(r + 1, n_s):
            if np.any(masks[r] & masks[q]):
                raise ValueError(f"coils {r + 1} and {q + 1} overlap")
        if conducting is not None and np.any(masks[r] & conducting):
            raise ValueError(f"coil {r + 1} overlaps the conducting region")

    j_s = ops.curl @ y_s if n_s else np.zeros((mesh.n_facets, 0))
    return WindingFunctions(x_s=x_s, y_s=np.asarray(y_s), j_s=np.asarray(j_s), coil_cells=tuple(masks))


def cut_plane_current(mesh: FitMesh, wf: WindingFunctions, coil_index: int, coil: CoilSpec) -> float:
    """Total facet current crossing a vertical half-plane through the east leg.

    For a unit port current this must equal the ampere-turns N of the coil.
    """
    wx0, wy0, wx1, wy1 = coil.window
    j_mid = int(round(np.clip((wy0 + wy1) / 2.0, 0, mesh.ny)))
    i_start = max(0, int(np.ceil(wx1 - 1e-9)))
    total = 0.0
    for k in range(coil.z0, coil.z1):
        for i in range(i_start, mesh.nx):
            f = int(mesh.facet_id(1, i, j_mid, k))
            total += wf.j_s[f, coil_index]
    return float(abs(total))
