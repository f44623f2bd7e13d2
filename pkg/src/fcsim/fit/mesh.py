"""Structured hexahedral grid with canonical entity indexing.

Nodes sit at (i, j, k) with 0 <= i <= nx etc.; cells, edges and facets are
indexed by their lowest-corner node.  Entity ids are direction-blocked and
row-major with i fastest:

    node  (i,j,k)        id = i + (nx+1)*(j + (ny+1)*k)
    edge  x|y|z blocks   x-edge (i,j,k), 0 <= i < nx, local i + nx*(j + (ny+1)*k)
    facet x|y|z blocks   x-facet (i,j,k) has normal x, spans y-z
    cell  (i,j,k)        id = i + nx*(j + ny*k)

Dual quantities follow the standard staggered construction: the dual facet
of an edge is the transverse box of half-cells around it (halved at domain
boundaries), the dual edge of a facet crosses it between the two adjacent
cell centers (half length at boundaries).
"""

from __future__ import annotations

from functools import cached_property

import numpy as np


class FitMesh:
    def __init__(self, nx: int, ny: int, nz: int, dx: float, dy: float, dz: float):
        for name, v in (("nx", nx), ("ny", ny), ("nz", nz)):
            if int(v) != v or v < 1:
                raise ValueError(f"{name} must be a positive integer, got {v!r}")
        for name, v in (("dx", dx), ("dy", dy), ("dz", dz)):
            if not (v > 0):
                raise ValueError(f"{name} must be positive, got {v!r}")
        self.nx, self.ny, self.nz = int(nx), int(ny), int(nz)
        self.dx, self.dy, self.dz = float(dx), float(dy), float(dz)

    # ---- counts ------------------------------------------------------

    @property
    def n_nodes(self) -> int:
        return (self.nx + 1) * (self.ny + 1) * (self.nz + 1)

    @property
    def n_edges_dir(self) -> tuple[int, int, int]:
        nx, ny, nz = self.nx, self.ny, self.nz
        return (
            nx * (ny + 1) * (nz + 1),
            (nx + 1) * ny * (nz + 1),
            (nx + 1) * (ny + 1) * nz,
        )

    @property
    def n_edges(self) -> int:
        return sum(self.n_edges_dir)

    @property
    def n_facets_dir(self) -> tuple[int, int, int]:
        nx, ny, nz = self.nx, self.ny, self.nz
        return ((nx + 1) * ny * nz, nx * (ny + 1) * nz, nx * ny * (nz + 1))

    @property
    def n_facets(self) -> int:
        return sum(self.n_facets_dir)

    @property
    def n_cells(self) -> int:
        return self.nx * self.ny * self.nz

    @property
    def spacings(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz])

    # ---- id helpers (accept scalars or arrays) -----------------------

    def node_id(self, i, j, k):
        return i + (self.nx + 1) * (j + (self.ny + 1) * np.asarray(k))

    def edge_id(self, d: int, i, j, k):
        nx, ny, nz = self.nx, self.ny, self.nz
        ex, ey, _ = self.n_edges_dir
        i, j, k = np.asarray(i), np.asarray(j), np.asarray(k)
        if d == 0:
            return i + nx * (j + (ny + 1) * k)
        if d == 1:
            return ex + i + (nx + 1) * (j + ny * k)
        return ex + ey + i + (nx + 1) * (j + (ny + 1) * k)

    def facet_id(self, d: int, i, j, k):
        nx, ny, nz = self.nx, self.ny, self.nz
        fx, fy, _ = self.n_facets_dir
        i, j, k = np.asarray(i), np.asarray(j), np.asarray(k)
        if d == 0:
            return i + (nx + 1) * (j + ny * k)
        if d == 1:
            return fx + i + nx * (j + (ny + 1) * k)
        return fx + fy + i + nx * (j + ny * k)

    def cell_id(self, i, j, k):
        return i + self.nx * (j + self.ny * np.asarray(k))

    # ---- per-entity coordinate tables --------------------------------

    @cached_property
    def edge_table(self) -> tuple[np.ndarray, np.ndarray]:
        """(dir, (i,j,k)) per edge: dir shape (n_edges,), origin (n_edges, 3)."""
        dirs, ijk = [], []
        nx, ny, nz = self.nx, self.ny, self.nz
        ranges = [(nx, ny + 1, nz + 1), (nx + 1, ny, nz + 1), (nx + 1, ny + 1, nz)]
        for d, (ri, rj, rk) in enumerate(ranges):
            kk, jj, ii = np.meshgrid(np.arange(rk), np.arange(rj), np.arange(ri), indexing="ij")
            n = ii.size
            dirs.append(np.full(n, d, dtype=np.int64))
            ijk.append(np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()]))
        return np.concatenate(dirs), np.vstack(ijk)

    @cached_property
    def facet_table(self) -> tuple[np.ndarray, np.ndarray]:
        dirs, ijk = [], []
        nx, ny, nz = self.nx, self.ny, self.nz
        ranges = [(nx + 1, ny, nz), (nx, ny + 1, nz), (nx, ny, nz + 1)]
        for d, (ri, rj, rk) in enumerate(ranges):
            kk, jj, ii = np.meshgrid(np.arange(rk), np.arange(rj), np.arange(ri), indexing="ij")
            n = ii.size
            dirs.append(np.full(n, d, dtype=np.int64))
            ijk.append(np.column_stack([ii.ravel(), jj.ravel(), kk.ravel()]))
        return np.concatenate(dirs), np.vstack(ijk)

    @cached_property
    def edge_nodes(self) -> np.ndarray:
        """(n_edges, 2) start/end node ids; the edge points along +direction."""
        d, o = self.edge_table
        start = self.node_id(o[:, 0], o[:, 1], o[:, 2])
        step = np.zeros_like(o)
        for dd in range(3):
            step[d == dd, dd] = 1
        e = o + step
        end = self.node_id(e[:, 0], e[:, 1], e[:, 2])
        return np.column_stack([start, end])

    @cached_property
    def boundary_edge_mask(self) -> np.ndarray:
        """Edges lying in one of the six outer planes (tangential on boundary)."""
        d, o = self.edge_table
        nx, ny, nz = self.nx, self.ny, self.nz
        i, j, k = o[:, 0], o[:, 1], o[:, 2]
        on = np.zeros(self.n_edges, dtype=bool)
        on[d == 0] = ((j == 0) | (j == ny) | (k == 0) | (k == nz))[d == 0]
        on[d == 1] = ((i == 0) | (i == nx) | (k == 0) | (k == nz))[d == 1]
        on[d == 2] = ((i == 0) | (i == nx) | (j == 0) | (j == ny))[d == 2]
        return on

    def _dual_width(self, idx: np.ndarray, count: int, h: float) -> np.ndarray:
        w = np.full(idx.shape, h, dtype=float)
        w[(idx == 0) | (idx == count)] = 0.5 * h
        return w

    @cached_property
    def edge_length(self) -> np.ndarray:
        d, _ = self.edge_table
        return self.spacings[d]

    @cached_property
    def edge_dual_area(self) -> np.ndarray:
        d, o = self.edge_table
        i, j, k = o[:, 0], o[:, 1], o[:, 2]
        wx = self._dual_width(i, self.nx, self.dx)
        wy = self._dual_width(j, self.ny, self.dy)
        wz = self._dual_width(k, self.nz, self.dz)
        area = np.where(d == 0, wy * wz, np.where(d == 1, wx * wz, wx * wy))
        return area

    @cached_property
    def facet_area(self) -> np.ndarray:
        d, _ = self.facet_table
        areas = np.array([self.dy * self.dz, self.dx * self.dz, self.dx * self.dy])
        return areas[d]

    @cached_property
    def facet_dual_length(self) -> np.ndarray:
        d, o = self.facet_table
        i, j, k = o[:, 0], o[:, 1], o[:, 2]
        lx = self._dual_width(i, self.nx, self.dx)
        ly = self._dual_width(j, self.ny, self.dy)
        lz = self._dual_width(k, self.nz, self.dz)
        return np.where(d == 0, lx, np.where(d == 1, ly, lz))

    @cached_property
    def facet_cells(self) -> np.ndarray:
        """(n_facets, 2) adjacent cell ids along the normal, -1 outside."""
        d, o = self.facet_table
        i, j, k = o[:, 0], o[:, 1], o[:, 2]
        out = np.full((self.n_facets, 2), -1, dtype=np.int64)
        counts = (self.nx, self.ny, self.nz)
        for dd in range(3):
            sel = d == dd
            lo = np.column_stack([i[sel], j[sel], k[sel]])
            lo[:, dd] -= 1
            ok = lo[:, dd] >= 0
            ids = np.where(ok, self.cell_id(lo[:, 0], lo[:, 1], lo[:, 2]), -1)
            out[sel, 0] = ids
            hi = np.column_stack([i[sel], j[sel], k[sel]])
            ok = hi[:, dd] < counts[dd]
            ids = np.where(ok, self.cell_id(hi[:, 0], hi[:, 1], hi[:, 2]), -1)
            out[sel, 1] = ids
        return out

    @cached_property
    def edge_cells(self) -> np.ndarray:
        """(n_edges, 4) ids of cells sharing each edge, -1 where absent."""
        d, o = self.edge_table
        out = np.full((self.n_edges, 4), -1, dtype=np.int64)
        counts = (self.nx, self.ny, self.nz)
        trans = {0: (1, 2), 1: (0, 2), 2: (0, 1)}
        for dd in range(3):
            sel = np.where(d == dd)[0]
            t1, t2 = trans[dd]
            for slot, (a, b) in enumerate([(0, 0), (0, 1), (1, 0), (1, 1)]):
                c = o[sel].copy()
                c[:, t1] -= a
                c[:, t2] -= b
                ok = (
                    (c[:, 0] >= 0)
                    & (c[:, 1] >= 0)
                    & (c[:, 2] >= 0)
                    & (c[:, t1] < counts[t1])
                    & (c[:, t2] < counts[t2])
                    & (c[:, dd] < counts[dd])
                )
                ids = np.where(ok, self.cell_id(c[:, 0], c[:, 1], c[:, 2]), -1)
                out[sel, slot] = ids
        return out

    def cell_edge_ids(self, i: int, j: int, k: int) -> np.ndarray:
        """The 12 edge ids of cell (i,j,k)."""
        ids = []
        for a in (0, 1):
            for b in (0, 1):
                ids.append(self.edge_id(0, i, j + a, k + b))
                ids.append(self.edge_id(1, i + a, j, k + b))
                ids.append(self.edge_id(2, i + a, j + b, k))
        return np.array(sorted(int(e) for e in ids))

    def region_edge_mask(self, cells: np.ndarray) -> np.ndarray:
        """Edges belonging to at least one cell of the region (bool mask)."""
        cells = np.asarray(cells, dtype=bool)
        mask = np.zeros(self.n_edges, dtype=bool)
        ec = self.edge_cells
        hit = (ec >= 0) & cells[np.clip(ec, 0, None)]
        mask = hit.any(axis=1)
        return mask

    def cell_box_mask(self, box: tuple[int, int, int, int, int, int]) -> np.ndarray:
        """Bool cell mask for index box [x0,x1) x [y0,y1) x [z0,z1)."""
        x0, y0, z0, x1, y1, z1 = box
        mask = np.zeros((self.nz, self.ny, self.nx), dtype=bool)
        mask[z0:z1, y0:y1, x0:x1] = True
        return mask.reshape(-1)
