import numpy as np
import pytest

from fcsim.elements import verify_inductance_like
from fcsim.fit.fieldspec import build_fit_model, parse_fieldspec
from fcsim.formulations import (
    WindingAssumptionError,
    build_astar,
    build_tomega,
    helmholtz_split,
    l_lambda_astar,
    l_lambda_tomega,
)
from fcsim.solver import element_pencil, pencil_index

from helpers import fieldspec_text, refinement_family_text
from oracles import dense_l_astar, dense_l_tomega


def _fit(text):
    return build_fit_model(parse_fieldspec(text))


# ---- element residual basics --------------------------------------------


def test_tomega_zero_state_zero_residual(fit2_tomega):
    el = build_tomega(fit2_tomega)
    z = np.zeros
    r = el.residual(z(el.n_dof), z(1), z(el.n_dof), z(1), z(1), 0.0)
    assert np.abs(r).max() == 0.0
    assert el.n_ports == fit2_tomega.spec.n_coils


def test_tomega_dc_state_solves_gauss_block(fit2_tomega):
    el = build_tomega(fit2_tomega)
    i_s = np.array([2.0])
    # stationary state: solve the Gauss block for psi with t_red = 0
    st, m_mu, y = el.st_red, el.m_mu, el.y
    l_mu = (st @ np.diag(m_mu) @ st.T)
    psi = np.linalg.solve(l_mu, -(st @ (m_mu * (y @ i_s))))
    x = np.concatenate([np.zeros(el.n_t), psi])
    r = el.residual(np.zeros(el.n_dof), np.zeros(1), x, i_s, np.zeros(1), 0.0)
    scale = np.abs(m_mu).max()
    assert np.abs(r).max() <= 1e-10 * scale  # K_rho t = 0 and v = 0 at DC


def test_astar_zero_state_zero_residual(fit2_astar):
    el = build_astar(fit2_astar)
    z = np.zeros
    r = el.residual(z(el.n_dof), z(1), z(el.n_dof), z(1), z(1), 0.0)
    assert np.abs(r).max() == 0.0
    assert el.n_ports == fit2_astar.spec.n_coils


def test_astar_dc_solvable_on_gauged_space(fit2_astar):
    el = build_astar(fit2_astar)
    i_s = np.array([1.5])
    a, *_ = np.linalg.lstsq(el.k_nu, el.x_bar @ i_s, rcond=None)
    r = el.residual(np.zeros(el.n_dof), np.zeros(1), a, i_s, np.zeros(1), 0.0)
    assert np.abs(r[: el.n_dof]).max() <= 1e-9 * np.abs(el.x_bar @ i_s).max()


# ---- closed-form inductance vs the dense oracles -------------------------


@pytest.mark.parametrize("n", [2, 4])
def test_l_tomega_matches_dense_oracle(n):
    conductor = (1, 1, 1, 2, 2, 2) if n == 2 else (1, 1, 2, 3, 3, 3)
    coil = "0,0,1,1,0,1,1" if n == 2 else "2,2,2,2,0,1,2"
    el = build_tomega(_fit(fieldspec_text(n, conductor=conductor, coil=coil, d=1.0 / n)))
    ll = l_lambda_tomega(el)
    oracle = dense_l_tomega(el)
    assert np.abs(ll.matrix - oracle).max() <= 1e-8 * np.abs(oracle).max()
    assert ll.min_eigenvalue > 0


@pytest.mark.parametrize("n", [2, 4])
def test_l_astar_matches_dense_oracle(n):
    conductor = None if n == 2 else (1, 1, 2, 3, 3, 3)
    coil = "0,0,1,1,0,1,1" if n == 2 else "2,2,2,2,0,1,2"
    el = build_astar(
        _fit(fieldspec_text(n, formulation="astar", conductor=conductor, coil=coil, d=1.0 / n))
    )
    ll = l_lambda_astar(el)
    oracle = dense_l_astar(el)
    assert np.abs(ll.matrix - oracle).max() <= 1e-8 * np.abs(oracle).max()
    assert ll.min_eigenvalue > 0


def test_numeric_extraction_matches_closed_form(fit2_tomega, fit2_astar):
    el_t = build_tomega(fit2_tomega)
    ll_t = l_lambda_tomega(el_t)
    probe = verify_inductance_like(el_t)
    assert np.abs(probe.l_matrix - ll_t.matrix).max() <= 1e-8 * np.abs(ll_t.matrix).max()
    el_a = build_astar(fit2_astar)
    ll_a = l_lambda_astar(el_a)
    probe = verify_inductance_like(el_a)
    assert np.abs(probe.l_matrix - ll_a.matrix).max() <= 1e-8 * np.abs(ll_a.matrix).max()


def test_two_identical_coils_symmetric_inductance():
    text = "\n".join(
        [
            "grid.nx = 8",
            "grid.ny = 3",
            "grid.nz = 3",
            "grid.dx = 0.1",
            "grid.dy = 0.1",
            "grid.dz = 0.1",
            "coil.1.frame = 1,1,2,2,1,2,1",
            "coil.1.turns = 10",
            "coil.2.frame = 6,1,7,2,1,2,1",
            "coil.2.turns = 10",
            "material.mu_r = 1.0",
            "formulation = tomega",
        ]
    )
    el = build_tomega(_fit(text))
    ll = l_lambda_tomega(el)
    assert ll.matrix.shape == (2, 2)
    oracle = dense_l_tomega(el)
    assert np.abs(ll.matrix - oracle).max() <= 1e-8 * np.abs(oracle).max()
    # identical far-apart coils: equal self terms, tiny mutual
    assert abs(ll.matrix[0, 0] - ll.matrix[1, 1]) <= 1e-6 * ll.matrix[0, 0]
    assert abs(ll.matrix[0, 1] - ll.matrix[1, 0]) <= 1e-10 * ll.matrix[0, 0]
    assert abs(ll.matrix[0, 1]) < 0.2 * ll.matrix[0, 0]


def test_coil_touching_conductor_rejected():
    # conductor cell-disjoint from the coil but sharing edges with its
    # winding support: the perpendicularity assumption fails
    text = fieldspec_text(2, formulation="astar", conductor=(0, 1, 1, 1, 2, 2))
    with pytest.raises(WindingAssumptionError, match="conductor"):
        l_lambda_astar(build_astar(_fit(text)))


def test_coil_overlapping_conductor_rejected_at_build():
    text = fieldspec_text(2, conductor=(1, 0, 0, 2, 1, 1))
    with pytest.raises(ValueError, match="overlap"):
        _fit(text)


def test_gauge_invariance_of_inductance():
    # conductor with interior tree freedom so the two trees actually differ
    text = fieldspec_text(4, conductor=(1, 1, 1, 3, 3, 3), coil="2,2,2,2,3,4,2", d=0.25)
    fit = _fit(text)
    el1 = build_tomega(fit)
    el2 = build_tomega(fit, reverse_tree=True)
    assert not np.array_equal(el1.gauge.tree_edges, el2.gauge.tree_edges)
    l1 = l_lambda_tomega(el1).matrix
    l2 = l_lambda_tomega(el2).matrix
    assert np.abs(l1 - l2).max() <= 1e-8 * np.abs(l1).max()
    text_a = fieldspec_text(
        4, formulation="astar", conductor=(1, 1, 2, 3, 3, 3), coil="2,2,2,2,0,1,2", d=0.25
    )
    fit_a = _fit(text_a)
    a1 = build_astar(fit_a)
    a2 = build_astar(fit_a, reverse_tree=True)
    assert not np.array_equal(a1.gauge.tree_edges, a2.gauge.tree_edges)
    la1 = l_lambda_astar(a1).matrix
    la2 = l_lambda_astar(a2).matrix
    assert np.abs(la1 - la2).max() <= 1e-8 * np.abs(la1).max()


def test_cross_formulation_gap_shrinks_2_to_4():
    lt, la = {}, {}
    for n in (2, 4):
        lt[n] = l_lambda_tomega(build_tomega(_fit(refinement_family_text(n, "tomega")))).matrix[0, 0]
        la[n] = l_lambda_astar(build_astar(_fit(refinement_family_text(n, "astar")))).matrix[0, 0]
    gap2 = abs(lt[2] - la[2]) / la[2]
    gap4 = abs(lt[4] - la[4]) / la[4]
    assert gap4 < gap2


# ---- excitation corollaries ----------------------------------------------


def test_excitation_corollaries_2cubed(fit2_tomega, fit2_astar):
    for el in (build_tomega(fit2_tomega), build_astar(fit2_astar)):
        assert pencil_index(*element_pencil(el, "voltage")) == 1
        assert pencil_index(*element_pencil(el, "current")) == 2


# ---- Helmholtz split ------------------------------------------------------


def test_helmholtz_split_3cubed(rng):
    fit = _fit(fieldspec_text(3, conductor=None, coil="1,1,2,2,0,1,1", d=1.0 / 3))
    ops, m_mu = fit.ops, fit.mats.m_mu
    st = ops.div_dual_reduced.T.toarray()
    ct = ops.curl.T.toarray() / m_mu[:, None]
    for _ in range(20):
        x = rng.standard_normal(fit.mesh.n_edges)
        x1, x2 = helmholtz_split(x, ops, m_mu)
        recon = st @ x1 + ct @ x2
        assert np.linalg.norm(x - recon) <= 1e-10 * np.linalg.norm(x)
    # pure gradient and pure weighted-curl fields reconstruct exactly
    for x in (st @ rng.standard_normal(st.shape[1]), ct @ rng.standard_normal(ct.shape[1])):
        x1, x2 = helmholtz_split(x, ops, m_mu)
        recon = st @ x1 + ct @ x2
        assert np.linalg.norm(x - recon) <= 1e-10 * max(np.linalg.norm(x), 1e-300)


# ---- structural invariant -------------------------------------------------


def test_no_port_voltage_derivative_in_signatures(fit2_tomega, fit2_astar):
    # the residual signature takes (dx, di, x, i, v, t): dv never enters; the
    # voltage Jacobian must be constant in v for both field elements
    for el in (build_tomega(fit2_tomega), build_astar(fit2_astar)):
        z = np.zeros
        j1 = el.jacobians(z(el.n_dof), z(1), z(el.n_dof), z(1), np.array([0.0]), 0.0)
        j2 = el.jacobians(z(el.n_dof), z(1), z(el.n_dof), z(1), np.array([5.0]), 0.0)
        assert np.array_equal(j1.f_v, j2.f_v)
