"""Gauged magnetoquasistatic field elements.

Both formulations wrap the same FIT model into the generalized element
contract, with internal state x, port currents i and port voltages v:

T-Omega (electric vector potential on the conductor cotree, magnetic scalar
potential on the pinned node set):

    K_rho t  +  P^T M_mu d/dt (P t + S~^T psi + Y i)          = 0
    S~ M_mu (P t + S~^T psi + Y i)                            = 0
    Y^T M_mu d/dt (P t + S~^T psi + Y i)  -  v                = 0

A* (magnetic vector potential on conducting edges plus the air cotree):

    Mbar_sigma d/dt a  +  K_nu a  -  Xbar i                   = 0
    d/dt (Xbar^T a)  -  v                                     = 0

With a saturating material the flux map is evaluated through the scalar
B-H law per edge/facet and every time-derivative block carries the
differential material matrix; the stationary Gauss block keeps the chord
form.  Jacobians are exact (including the curvature term), so Newton on an
implicit Euler step converges quadratically.

The port inductance has closed forms (dense, verification-scale only):

    T-Omega:  L = Y^T (W - W P (P^T W P)^{-1} P^T W) Y,
              W = M_mu - M_mu S~^T L_mu^{-1} S~ M_mu,  L_mu = S~ M_mu S~^T
    A*:       L = Xbar^T Q (Q^T K_nu Q + Pc^T Pc)^{-1} Q^T Xbar,
              Q the orthogonal projector onto ker Mbar_sigma, Pc = I - Q
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .elements import ElementJacobians, GeneralizedElement
from .fit.fieldspec import FitModel, build_fit_model, parse_fieldspec
from .fit.materials import differential_mu_matrix, differential_nu_matrix
from .gauging import (
    GaugeSelection,
    check_simply_connected,
    cotree_projector,
    spanning_tree,
    verify_gauge_astar,
    verify_gauge_tomega,
)
from .linalg import numeric_rank, smallest_eigenvalue


class GaugeVerificationError(RuntimeError):
    pass


class WindingAssumptionError(RuntimeError):
    pass


# ---------------------------------------------------------------------
# T-Omega
# ---------------------------------------------------------------------


class TOmegaElement(GeneralizedElement):
    """Gauged T-Omega field device; state x = (t_red, psi)."""

    def __init__(self, fit: FitModel, gauge: GaugeSelection):
        self.fit = fit
        self.gauge = gauge
        mesh, ops, mats, wf = fit.mesh, fit.ops, fit.mats, fit.windings

        self.p = gauge.p.tocsr()
        self.st_red = ops.div_dual_reduced.tocsr()
        self.y = wf.y_s
        self.n_t = gauge.n_free
        self.n_psi = self.st_red.shape[0]
        self.n_ports = wf.n_coils
        self.n_dof = self.n_t + self.n_psi
        self.is_linear = fit.bh.linear
        self.m_mu = mats.m_mu
        self.m_rho = mats.m_rho
        self.bh = fit.bh

        cp = (ops.curl @ self.p).tocsr()
        self.k_rho = (cp.T @ sp.diags(self.m_rho) @ cp).toarray()
        self.cp = cp

        # edge map J: (t_red, psi, i) -> edge field h
        self.j_map = sp.hstack(
            [self.p, self.st_red.T, sp.csr_matrix(self.y)], format="csr"
        )
        if self.is_linear:
            gram = (self.j_map.T @ sp.diags(self.m_mu) @ self.j_map).toarray()
            self._gram = gram
            self._rows_t = gram[: self.n_t]
            self._rows_psi = gram[self.n_t : self.n_dof]
            self._rows_s = gram[self.n_dof :]

    # flux through the dual facet of each edge, odd in the line integral
    def _beta(self, h: np.ndarray) -> np.ndarray:
        mesh = self.fit.mesh
        h_loc = np.abs(h) / mesh.edge_length
        return mesh.edge_dual_area * self.bh.b(h_loc) * np.sign(h)

    def _beta2(self, h: np.ndarray) -> np.ndarray:
        mesh = self.fit.mesh
        h_loc = np.abs(h) / mesh.edge_length
        return (
            mesh.edge_dual_area
            / mesh.edge_length**2
            * self.bh.d2b_dh2(h_loc)
            * np.sign(h)
        )

    def _zi(self, x, i) -> np.ndarray:
        return np.concatenate([x, i])

    def residual(self, dx, di, x, i, v, t):
        if self.is_linear:
            dz = self._zi(dx, di)
            z = self._zi(x, i)
            r_t = self.k_rho @ x[: self.n_t] + self._rows_t @ dz
            r_psi = self._rows_psi @ z
            r_s = self._rows_s @ dz - v
            return np.concatenate([r_t, r_psi, r_s])
        h = self.j_map @ self._zi(x, i)
        hdot = self.j_map @ self._zi(dx, di)
        m_mud = differential_mu_matrix(self.fit.mesh, self.bh, h)
        flux_rate = m_mud * hdot
        r_t = self.k_rho @ x[: self.n_t] + self.p.T @ flux_rate
        r_psi = self.st_red @ self._beta(h)
        r_s = self.y.T @ flux_rate - v
        return np.concatenate([r_t, r_psi, r_s])

    def jacobians(self, dx, di, x, i, v, t):
        n_dof, n_s = self.n_dof, self.n_ports
        f_v = np.zeros((self.n_rows, n_s))
        f_v[n_dof:] = -np.eye(n_s)
        if self.is_linear:
            e_full = np.vstack(
                [self._rows_t, np.zeros((self.n_psi, n_dof + n_s)), self._rows_s]
            )
            a_full = np.zeros_like(e_full)
            a_full[: self.n_t, : self.n_t] = self.k_rho
            a_full[self.n_t : n_dof] = self._rows_psi
        else:
            h = self.j_map @ self._zi(x, i)
            hdot = self.j_map @ self._zi(dx, di)
            m_mud = differential_mu_matrix(self.fit.mesh, self.bh, h)
            sel = sp.vstack(
                [self.p.T, sp.csr_matrix((self.n_psi, self.fit.mesh.n_edges)), sp.csr_matrix(self.y.T)],
                format="csr",
            )
            e_full = (sel @ sp.diags(m_mud) @ self.j_map).toarray()
            # curvature of the flux map enters the state derivative of the
            # rate rows; the Gauss block differentiates the chord flux exactly
            curv = self._beta2(h) * hdot
            a_full = (sel @ sp.diags(curv) @ self.j_map).toarray()
            a_full[: self.n_t, : self.n_t] += self.k_rho
            a_full[self.n_t : n_dof] = (
                self.st_red @ sp.diags(m_mud) @ self.j_map
            ).toarray()
        return ElementJacobians(
            f_dx=e_full[:, :n_dof],
            f_di=e_full[:, n_dof:],
            f_x=a_full[:, :n_dof],
            f_i=a_full[:, n_dof:],
            f_v=f_v,
        )


def strict_interior_edge_mask(fit: FitModel) -> np.ndarray:
    """Edges whose four surrounding cells all exist and conduct.

    These carry the electric vector potential: the tangential trace on the
    conductor surface is zero by the boundary condition, and only with this
    restricted pool does zeroing a (surface-grounded) tree remove exactly
    the gradient freedom, keeping the physics independent of the tree.
    """
    ec = fit.mesh.edge_cells
    cond = fit.conducting_cells
    all_present = np.all(ec >= 0, axis=1)
    all_cond = np.all(cond[np.clip(ec, 0, None)] & (ec >= 0), axis=1)
    return all_present & all_cond


def build_tomega(fit: FitModel, *, reverse_tree: bool = False) -> TOmegaElement:
    """Surface-grounded tree-cotree gauge on the conductor interior, then the
    element; the gauge must verify."""
    mesh = fit.mesh
    region = fit.conducting_cells
    pool = strict_interior_edge_mask(fit)
    if region.any() and pool.any():
        ok, b1 = check_simply_connected(mesh, region)
        if not ok:
            raise GaugeVerificationError(
                f"conducting region not simply connected (first Betti number {b1})"
            )
        # ground every pool node that touches a non-pool edge (the surface):
        # the tangential trace is already zero there
        en = mesh.edge_nodes
        grounded = np.zeros(mesh.n_nodes, dtype=bool)
        non_pool = ~pool
        grounded[en[non_pool, 0]] = True
        grounded[en[non_pool, 1]] = True
        tree = spanning_tree(
            mesh, region, pool=pool, grounded=grounded, reverse=reverse_tree
        )
        gauge = cotree_projector(mesh, tree, region, region="conducting", pool=pool)
    else:
        if region.any():
            ok, b1 = check_simply_connected(mesh, region)
            if not ok:
                raise GaugeVerificationError(
                    f"conducting region not simply connected (first Betti number {b1})"
                )
        gauge = GaugeSelection(
            "conducting",
            np.zeros(0, dtype=np.int64),
            np.zeros(0, dtype=np.int64),
            mesh.n_edges,
        )
    report = verify_gauge_tomega(fit.ops, fit.mats, gauge)
    if not report.ok:
        failed = [k for k, v in report.checks.items() if not v]
        raise GaugeVerificationError(f"T-Omega gauge verification failed: {failed}")
    return TOmegaElement(fit, gauge)


# ---------------------------------------------------------------------
# A*
# ---------------------------------------------------------------------


class AStarElement(GeneralizedElement):
    """Gauged A* field device; state x = a_red on the ungauged edges."""

    def __init__(self, fit: FitModel, gauge: GaugeSelection):
        self.fit = fit
        self.gauge = gauge
        mats, ops, wf = fit.mats, fit.ops, fit.windings

        self.p = gauge.p.tocsr()
        self.n_dof = gauge.n_free
        self.n_ports = wf.n_coils
        self.is_linear = fit.bh.linear
        self.bh = fit.bh

        self.m_sigma_bar = mats.m_sigma[gauge.free_edges]
        self.cp = (ops.curl @ self.p).tocsr()
        self.k_nu = (self.cp.T @ sp.diags(mats.m_nu) @ self.cp).toarray()
        self.x_bar = wf.x_s[gauge.free_edges, :]

    def _eta(self, b: np.ndarray) -> np.ndarray:
        """Facet magnetomotive drop for a facet flux vector."""
        mesh = self.fit.mesh
        b_loc = np.abs(b) / mesh.facet_area
        return mesh.facet_dual_length * self.bh.h_of_b(b_loc) * np.sign(b)

    def residual(self, dx, di, x, i, v, t):
        if self.is_linear:
            r_a = self.m_sigma_bar * dx + self.k_nu @ x - self.x_bar @ i
        else:
            r_a = self.m_sigma_bar * dx + self.cp.T @ self._eta(self.cp @ x) - self.x_bar @ i
        r_s = self.x_bar.T @ dx - v
        return np.concatenate([r_a, r_s])

    def jacobians(self, dx, di, x, i, v, t):
        n_a, n_s = self.n_dof, self.n_ports
        if self.is_linear:
            k = self.k_nu
        else:
            m_nud = differential_nu_matrix(self.fit.mesh, self.bh, self.cp @ x)
            k = (self.cp.T @ sp.diags(m_nud) @ self.cp).toarray()
        f_dx = np.vstack([np.diag(self.m_sigma_bar), self.x_bar.T])
        f_x = np.vstack([k, np.zeros((n_s, n_a))])
        f_i = np.vstack([-self.x_bar, np.zeros((n_s, n_s))])
        f_v = np.vstack([np.zeros((n_a, n_s)), -np.eye(n_s)])
        return ElementJacobians(
            f_dx=f_dx,
            f_di=np.zeros((self.n_rows, n_s)),
            f_x=f_x,
            f_i=f_i,
            f_v=f_v,
        )


def _conductor_component_node_masks(fit: FitModel) -> list[np.ndarray]:
    """Node masks of the facet-connected conducting components."""
    mesh = fit.mesh
    cond = fit.conducting_cells
    ids = np.where(cond)[0]
    if ids.size == 0:
        return []
    nx, ny, nz = mesh.nx, mesh.ny, mesh.nz
    id_set = set(int(c) for c in ids)
    seen: set[int] = set()
    masks = []
    for start in ids:
        start = int(start)
        if start in seen:
            continue
        comp = [start]
        seen.add(start)
        stack = [start]
        while stack:
            c = stack.pop()
            i, j, k = c % nx, (c // nx) % ny, c // (nx * ny)
            for di, dj, dk in ((1, 0, 0), (-1, 0, 0), (0, 1, 0), (0, -1, 0), (0, 0, 1), (0, 0, -1)):
                ii, jj, kk = i + di, j + dj, k + dk
                if 0 <= ii < nx and 0 <= jj < ny and 0 <= kk < nz:
                    n = int(mesh.cell_id(ii, jj, kk))
                    if n in id_set and n not in seen:
                        seen.add(n)
                        comp.append(n)
                        stack.append(n)
        mask = np.zeros(mesh.n_nodes, dtype=bool)
        for c in comp:
            i, j, k = c % nx, (c // nx) % ny, c // (nx * ny)
            for a in (0, 1):
                for b in (0, 1):
                    for d in (0, 1):
                        mask[int(mesh.node_id(i + a, j + b, k + d))] = True
        masks.append(mask)
    return masks


def build_astar(fit: FitModel, *, reverse_tree: bool = False) -> AStarElement:
    """Tree-cotree gauge in the non-conducting domain.

    Gradient freedom anchored at the domain boundary is removed by the
    Dirichlet condition and gradient freedom at conductor-contact nodes is
    regularized by the conductivity, so both node sets are grounded and the
    forest anchors exactly the pure-air interior nodes.  Anchoring a
    conductor-contact node instead would remove physical flux content and
    make the extracted inductance depend on the tree.
    """
    mesh = fit.mesh
    air_cells = ~fit.conducting_cells
    pool = fit.mats.m_sigma == 0
    en = mesh.edge_nodes
    grounded = np.zeros(mesh.n_nodes, dtype=bool)
    bd = mesh.boundary_edge_mask
    grounded[en[bd, 0]] = True
    grounded[en[bd, 1]] = True
    # each conductor component is one contracted super-node: its internal
    # gradient freedom carries conductivity and stays, but its floating
    # potential constant must be tied to ground by exactly one tree edge
    blobs = []
    for mask in _conductor_component_node_masks(fit):
        if np.any(mask & grounded):
            grounded |= mask
        else:
            blobs.append(mask)
    tree = spanning_tree(
        mesh, air_cells, pool=pool, grounded=grounded, blobs=blobs, reverse=reverse_tree
    )
    gauge = cotree_projector(
        mesh,
        tree,
        air_cells,
        region="nonconducting",
        pool=pool,
        dirichlet=mesh.boundary_edge_mask,
    )
    report = verify_gauge_astar(fit.ops, fit.mats, gauge)
    if not report.ok:
        failed = [k for k, v in report.checks.items() if not v]
        raise GaugeVerificationError(f"A* gauge verification failed: {failed}")
    return AStarElement(fit, gauge)


# ---------------------------------------------------------------------
# closed-form port inductance
# ---------------------------------------------------------------------


@dataclass(frozen=True)
class LLambda:
    matrix: np.ndarray
    formulation: str
    min_eigenvalue: float

    @property
    def spd(self) -> bool:
        return self.min_eigenvalue > 0


def _check_curl_independence(el: TOmegaElement) -> None:
    """Discrete current densities: curl images of Y and P must be independent."""
    cy = el.fit.ops.curl @ el.y
    if el.n_t == 0:
        if numeric_rank(cy) < el.n_ports:
            raise WindingAssumptionError("C Y_s is rank deficient")
        return
    cpm = el.cp.toarray()
    stacked = np.hstack([cy, cpm])
    if numeric_rank(stacked) != numeric_rank(cy) + numeric_rank(cpm):
        raise WindingAssumptionError(
            "source current density is not independent of the conductor curl space"
        )


def l_lambda_tomega(el: TOmegaElement) -> LLambda:
    """Closed-form L = Y^T W_P Y; raises when a gauge/grid assumption fails."""
    _check_curl_independence(el)
    m_mu = el.m_mu
    st = el.st_red
    l_mu = (st @ sp.diags(m_mu) @ st.T).toarray()
    try:
        l_mu_inv = np.linalg.cholesky(l_mu)
    except np.linalg.LinAlgError as exc:
        raise GaugeVerificationError("singular L_mu: gradient space degenerate") from exc

    def w_apply(vecs: np.ndarray) -> np.ndarray:
        mv = m_mu[:, None] * vecs
        return mv - m_mu[:, None] * (st.T @ np.linalg.solve(l_mu, st @ mv))

    wy = w_apply(el.y)
    l_full = el.y.T @ wy
    if el.n_t:
        wp = w_apply(el.p.toarray())
        pwp = el.p.T @ wp
        try:
            corr = (el.p.T @ wy).T @ np.linalg.solve(pwp, el.p.T @ wy)
        except np.linalg.LinAlgError as exc:
            raise GaugeVerificationError("singular P^T W P: cotree space degenerate") from exc
        l_full = l_full - corr
    lam = smallest_eigenvalue(l_full)
    return LLambda(matrix=l_full, formulation="tomega", min_eigenvalue=lam)


def l_lambda_astar(el: AStarElement) -> LLambda:
    """Closed-form L = Xbar^T Q (Q^T K_nu Q + Pc^T Pc)^{-1} Q^T Xbar."""
    sig = el.m_sigma_bar
    x_bar = el.x_bar
    if numeric_rank(x_bar) < el.n_ports:
        raise WindingAssumptionError("gauged winding matrix is rank deficient")
    scale = float(np.max(np.abs(x_bar))) if x_bar.size else 0.0
    if np.any(np.abs(x_bar[sig > 0]) > 1e-13 * max(scale, 1e-300)):
        raise WindingAssumptionError(
            "winding image meets the conductivity image (coil touches the conductor)"
        )
    q_mask = sig == 0
    q = np.diag(q_mask.astype(float))
    pc = np.eye(sig.size) - q
    m = q @ el.k_nu @ q + pc.T @ pc
    qx = q @ x_bar
    sol = np.linalg.solve(m, qx)
    l_full = qx.T @ sol
    lam = smallest_eigenvalue(l_full)
    return LLambda(matrix=l_full, formulation="astar", min_eigenvalue=lam)


# ---------------------------------------------------------------------
# utilities
# ---------------------------------------------------------------------


def helmholtz_split(x: np.ndarray, ops, m_mu: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Least-squares split x = S~^T x1 + M_mu^{-1} C^T x2 on the edge space.

    The two column groups differ in scale by the permeability magnitude, so
    the stacked system is column-equilibrated before solving; otherwise the
    reconstruction stalls at the scaled condition number.
    """
    st = ops.div_dual_reduced.T.toarray()
    ct = (ops.curl.T).toarray() / m_mu[:, None]
    stacked = np.hstack([st, ct])
    norms = np.linalg.norm(stacked, axis=0)
    norms[norms == 0] = 1.0
    coef, *_ = np.linalg.lstsq(stacked / norms, x, rcond=None)
    coef = coef / norms
    x1 = coef[: st.shape[1]]
    x2 = coef[st.shape[1] :]
    return x1, x2


def newton_materials(el: GeneralizedElement, dx, di, x, i, v, t) -> ElementJacobians:
    """Jacobian blocks with differential material matrices at the given state.

    Time-derivative blocks carry the differential permeability/reluctivity;
    stationary blocks keep the chord matrices.  For a linear material this
    coincides with the constant Jacobians.
    """
    return el.jacobians(dx, di, x, i, v, t)


def build_element(fit: FitModel) -> GeneralizedElement:
    if fit.spec.formulation == "tomega":
        return build_tomega(fit)
    return build_astar(fit)


def load_field_element(path: str) -> tuple[GeneralizedElement, FitModel]:
    """Parse a field spec file and build its element."""
    with open(path, "r", encoding="utf-8") as fh:
        spec = parse_fieldspec(fh.read())
    fit = build_fit_model(spec)
    return build_element(fit), fit
