"""Tree-cotree gauging on mesh edge graphs.

The electric vector potential is gauged by zeroing its degrees of freedom
on a spanning tree of the conducting-region edge graph; the magnetic vector
potential is gauged on a spanning tree of the non-conducting region, where
edges lying in the domain boundary are taken into the tree first so that
their zeroing coincides with the tangential Dirichlet condition (remaining
boundary edges are constrained outright).  Conducting edges carry their own
conductivity regularization and stay ungauged.

Trees are breadth-first with lexicographic neighbor order, so identical
inputs give identical trees; `reverse=True` flips the tie-break to produce
a second, equally valid tree for gauge-invariance checks.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .fit.mesh import FitMesh
from .fit.operators import DiscreteOperators
from .fit.materials import MaterialMatrices
from .linalg import numeric_rank, smallest_eigenvalue


class RegionError(ValueError):
    pass


def _region_cells_connected(mesh: FitMesh, cells: np.ndarray) -> int:
    """Number of facet-connected components of the cell region."""
    cells = np.asarray(cells, dtype=bool)
    ids = np.where(cells)[0]
    if ids.size == 0:
        return 0
    nx, ny = mesh.nx, mesh.ny
    id_set = set(int(c) for c in ids)
    seen: set[int] = set()
    comps = 0
    for start in ids:
        start = int(start)
        if start in seen:
            continue
        comps += 1
        stack = [start]
        seen.add(start)
        while stack:
            c = stack.pop()
            i = c % nx
            j = (c // nx) % ny
            k = c // (nx * ny)
            for di, dj, dk in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                ii, jj, kk = i + di, j + dj, k + dk
                if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < mesh.nz:
                    n = int(mesh.cell_id(ii, jj, kk))
                    if n in id_set and n not in seen:
                        seen.add(n)
                        stack.append(n)
    return comps


def check_simply_connected(mesh: FitMesh, cells: np.ndarray) -> tuple[bool, int]:
    """(ok, first_betti) for the cell region, via the Euler characteristic.

    chi = V - E + F - C of the region complex and b1 = b0 + b2 - chi, with
    b2 counted as the number of fully enclosed complement voids.  A torus of
    cells yields b1 = 1 and is rejected by the gauge builders.
    """
    cells = np.asarray(cells, dtype=bool)
    if not cells.any():
        return True, 0
    ids = np.where(cells)[0]
    nx, ny, nz = mesh.nx, mesh.ny, mesh.nz
    nodes: set[int] = set()
    edges: set[int] = set()
    facets: set[int] = set()
    for c in ids:
        i = int(c) % nx
        j = (int(c) // nx) % ny
        k = int(c) // (nx * ny)
        for a in (0, 1):
            for b in (0, 1):
                for d in (0, 1):
                    nodes.add(int(mesh.node_id(i + a, j + b, k + d)))
                edges.add(int(mesh.edge_id(0, i, j + a, k + b)))
                edges.add(int(mesh.edge_id(1, i + a, j, k + b)))
                edges.add(int(mesh.edge_id(2, i + a, j + b, k)))
        for d, (di, dj, dk) in enumerate([(1, 0, 0), (0, 1, 0), (0, 0, 1)]):
            facets.add(int(mesh.facet_id(d, i, j, k)))
            facets.add(int(mesh.facet_id(d, i + di, j + dj, k + dk)))
    chi = len(nodes) - len(edges) + len(facets) - len(ids)

    b0 = _region_cells_connected(mesh, cells)
    # voids: complement components that never touch the grid's outer box
    comp = ~cells
    comp_ids = np.where(comp)[0]
    comp_set = set(int(c) for c in comp_ids)
    seen: set[int] = set()
    b2 = 0
    for start in comp_ids:
        start = int(start)
        if start in seen:
            continue
        stack = [start]
        seen.add(start)
        touches = False
        while stack:
            c = stack.pop()
            i = c % nx
            j = (c // nx) % ny
            k = c // (nx * ny)
            if i in (0, nx - 1) or j in (0, ny - 1) or k in (0, nz - 1):
                touches = True
            for di, dj, dk in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                ii, jj, kk = i + di, j + dj, k + dk
                if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz:
                    n = int(mesh.cell_id(ii, jj, kk))
                    if n in comp_set and n not in seen:
                        seen.add(n)
                        stack.append(n)
        if not touches:
            b2 += 1
    b1 = b0 + b2 - chi
    return b1 == 0, b1


@dataclass(frozen=True)
class SpanningTree:
    edges: np.ndarray  # sorted edge ids
    root: int
    nodes: np.ndarray  # region node ids spanned


def spanning_tree(
    mesh: FitMesh,
    region_cells: np.ndarray,
    *,
    pool: np.ndarray | None = None,
    root: int | None = None,
    preferred: np.ndarray | None = None,
    grounded: np.ndarray | None = None,
    blobs: list[np.ndarray] | None = None,
    reverse: bool = False,
) -> SpanningTree:
    """Deterministic BFS spanning tree (or contracted forest) of a region's
    edge graph.

    ``pool`` restricts the usable edges (default: every edge of a region
    cell).  ``preferred`` edges are expanded before the rest on each front.
    ``grounded`` nodes are contracted into one pre-connected super-root:
    edges between them never enter the tree.  Each mask in ``blobs`` is
    contracted into a super-node that must itself be anchored by exactly
    one tree edge (used to tie a conductor component, whose internal
    gradient freedom is regularized elsewhere, to the grounded blob).  The
    tree then removes exactly the gradient freedom the contractions leave.
    The root defaults to the lowest-index region node.
    """
    if pool is None:
        pool = mesh.region_edge_mask(region_cells)
    pool = np.asarray(pool, dtype=bool)
    pool_ids = np.where(pool)[0]
    if pool_ids.size == 0:
        return SpanningTree(np.zeros(0, dtype=np.int64), -1, np.zeros(0, dtype=np.int64))

    # contraction ids: 0 = grounded super-root, 1..k = blobs, then nodes
    n_blobs = len(blobs) if blobs else 0
    cid = np.arange(mesh.n_nodes, dtype=np.int64) + n_blobs + 1
    if blobs:
        for i, mask in enumerate(blobs):
            cid[np.asarray(mask, bool)] = i + 1
    has_ground = grounded is not None and bool(np.any(grounded))
    if has_ground:
        cid[np.asarray(grounded, bool)] = 0

    en = mesh.edge_nodes
    pref = np.zeros(mesh.n_edges, dtype=bool) if preferred is None else np.asarray(preferred, bool)
    adj: dict[int, list[tuple[int, int, int]]] = {}
    for e in pool_ids:
        a, b = int(cid[en[e, 0]]), int(cid[en[e, 1]])
        if a == b:
            continue  # self-loop after contraction: pure cotree content
        cls = 0 if pref[e] else 1
        adj.setdefault(a, []).append((cls, int(e), b))
        adj.setdefault(b, []).append((cls, int(e), a))
    for v in adj.values():
        v.sort(reverse=reverse)

    keys = np.array(
        sorted({int(cid[en[e, 0]]) for e in pool_ids} | {int(cid[en[e, 1]]) for e in pool_ids}),
        dtype=np.int64,
    )
    region_nodes = np.unique(en[pool_ids].ravel())
    tree: list[int] = []

    if has_ground:
        visited = {0}
        root_key = 0
    else:
        if root is not None:
            root_key = int(cid[root])
            if root_key not in adj:
                raise RegionError(f"tree root node {root} not in the region")
        else:
            root_key = int(keys[0])
        visited = {root_key}

    def bfs(frontier: list[int], classes: tuple[int, ...]) -> None:
        while frontier:
            nxt: list[int] = []
            for key in frontier:
                for cls, e, other in adj.get(key, ()):
                    if cls not in classes or other in visited:
                        continue
                    visited.add(other)
                    tree.append(e)
                    nxt.append(other)
            frontier = nxt

    # The preferred (boundary-constrained) subgraph is spanned completely
    # before any interior edge enters the tree; otherwise an interior
    # shortcut could anchor a boundary node through the interior, which is
    # inconsistent with zeroing every boundary edge.
    start = sorted(visited, reverse=reverse)
    bfs(start, (0,))
    bfs(sorted(visited, reverse=reverse), (0, 1))
    missing = [int(k) for k in keys if int(k) not in visited]
    if missing:
        if has_ground or blobs:
            # isolated components: span each from its lowest contracted key
            for k in missing:
                if k not in visited:
                    visited.add(k)
                    bfs([k], (0, 1))
        else:
            raise RegionError("region edge graph is disconnected")
    if has_ground:
        root_node = int(np.where(np.asarray(grounded, bool))[0][0])
    elif root is not None:
        root_node = int(root)
    else:
        root_node = int(region_nodes[0])
    return SpanningTree(np.array(sorted(tree), dtype=np.int64), root_node, region_nodes)


@dataclass(frozen=True)
class GaugeSelection:
    """0/1 selection matrix P embedding the free (cotree) dofs into the full
    edge space; for the vector-potential gauge the conducting edges stay free
    and boundary edges are constrained alongside the tree."""

    region: str  # "conducting" | "nonconducting"
    tree_edges: np.ndarray
    free_edges: np.ndarray
    n_edges: int

    @property
    def p(self) -> sp.csc_matrix:
        n_free = self.free_edges.size
        return sp.csc_matrix(
            (np.ones(n_free), (self.free_edges, np.arange(n_free))),
            shape=(self.n_edges, n_free),
        )

    @property
    def n_free(self) -> int:
        return self.free_edges.size


def cotree_projector(
    mesh: FitMesh,
    tree: SpanningTree,
    region_cells: np.ndarray,
    *,
    region: str = "conducting",
    pool: np.ndarray | None = None,
    dirichlet: np.ndarray | None = None,
) -> GaugeSelection:
    """Selection of the ungauged edges.

    conducting     free = (region edges) - tree
    nonconducting  free = all edges - tree - dirichlet (vector potential:
                   everything outside the gauged region stays, boundary
                   edges are dropped with the tree)
    """
    if pool is None:
        pool = mesh.region_edge_mask(region_cells)
    constrained = np.zeros(mesh.n_edges, dtype=bool)
    constrained[tree.edges] = True
    if region == "conducting":
        free = np.asarray(pool, bool) & ~constrained
    elif region == "nonconducting":
        if dirichlet is None:
            dirichlet = mesh.boundary_edge_mask
        free = ~constrained & ~np.asarray(dirichlet, bool)
    else:
        raise ValueError(f"unknown gauge region {region!r}")
    return GaugeSelection(
        region=region,
        tree_edges=tree.edges.copy(),
        free_edges=np.where(free)[0].astype(np.int64),
        n_edges=mesh.n_edges,
    )


@dataclass(frozen=True)
class GaugeReport:
    ok: bool
    checks: dict[str, bool]
    details: dict[str, float]

    def __bool__(self) -> bool:
        return self.ok


def verify_gauge_tomega(
    ops: DiscreteOperators, mats: MaterialMatrices, gauge: GaugeSelection
) -> GaugeReport:
    """Electric-vector-potential gauge validity.

    Checks the gauged curl-curl conductor matrix K_rho for full rank and
    that no gauged field is a gradient: rank [P | S~^T] must be additive.
    """
    p = gauge.p
    cp = ops.curl @ p
    k_rho = (cp.T @ sp.diags(mats.m_rho) @ cp).toarray()
    if k_rho.size:
        smin = float(np.linalg.svd(k_rho, compute_uv=False)[-1])
        smax = float(np.linalg.norm(k_rho, 2))
        full_rank = smin > max(k_rho.shape) * np.finfo(float).eps * max(smax, 1e-300)
    else:
        smin, smax, full_rank = np.inf, 0.0, True

    st = ops.div_dual_reduced.T.toarray()
    stacked = np.hstack([p.toarray(), st]) if gauge.n_free else st
    additive = numeric_rank(stacked) == gauge.n_free + numeric_rank(st)

    checks = {"K_rho full rank": bool(full_rank), "P not a gradient": bool(additive)}
    return GaugeReport(all(checks.values()), checks, {"K_rho smallest singular value": smin})


def verify_gauge_astar(
    ops: DiscreteOperators,
    mats: MaterialMatrices,
    gauge: GaugeSelection,
) -> GaugeReport:
    """Vector-potential gauge validity: the pencil lam*Mbar_sigma + K_nu must
    be positive definite for lam > 0.  Both terms are PSD, so positivity of
    the sum at lam = 1 is checked along with PSD of each term."""
    p = gauge.p
    m_sigma_bar = mats.m_sigma[gauge.free_edges]
    cp = ops.curl @ p
    k_nu = (cp.T @ sp.diags(mats.m_nu) @ cp).toarray()
    n = k_nu.shape[0]
    if n == 0:
        return GaugeReport(True, {"pencil PD": True}, {"min eigenvalue": np.inf})
    total = k_nu + np.diag(m_sigma_bar)
    lam_min = smallest_eigenvalue(total)
    scale = max(float(np.max(np.abs(total))), 1e-300)
    pd = lam_min > n * np.finfo(float).eps * scale
    psd_sigma = bool(np.all(m_sigma_bar >= 0))
    psd_knu = smallest_eigenvalue(k_nu) > -n * np.finfo(float).eps * scale * 10
    checks = {
        "pencil PD at lam=1": bool(pd),
        "M_sigma PSD": psd_sigma,
        "K_nu PSD": bool(psd_knu),
    }
    return GaugeReport(all(checks.values()), checks, {"min eigenvalue": float(lam_min)})
