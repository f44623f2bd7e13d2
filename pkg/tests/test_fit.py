import numpy as np
import pytest

from fcsim.fit.materials import (
    MU0,
    LinearBH,
    MaterialMap,
    SaturatingBH,
    build_materials,
    differential_mu_matrix,
    differential_nu_matrix,
    probe_bh,
)
from fcsim.fit.mesh import FitMesh
from fcsim.fit.operators import build_operators
from fcsim.fit.windings import CoilSpec, build_windings, cut_plane_current
from fcsim.linalg import numeric_rank


def test_unit_cube_counts():
    m = FitMesh(1, 1, 1, 1.0, 1.0, 1.0)
    assert (m.n_nodes, m.n_edges, m.n_facets, m.n_cells) == (8, 12, 6, 1)


def test_2x2x2_counts():
    m = FitMesh(2, 2, 2, 1.0, 1.0, 1.0)
    assert (m.n_nodes, m.n_edges, m.n_facets, m.n_cells) == (27, 54, 36, 8)


def test_invalid_mesh_rejected():
    with pytest.raises(ValueError):
        FitMesh(0, 1, 1, 1.0, 1.0, 1.0)
    with pytest.raises(ValueError):
        FitMesh(1, 1, 1, 0.0, 1.0, 1.0)


def test_exactness_small_meshes():
    for nx in range(1, 5):
        for ny in range(1, 5):
            for nz in range(1, 5):
                m = FitMesh(nx, ny, nz, 0.3, 0.4, 0.5)
                ops = build_operators(m)
                assert (ops.curl @ ops.div_dual.T).nnz == 0
                assert (ops.div @ ops.curl).nnz == 0


def test_gradient_of_node_function_has_zero_curl():
    m = FitMesh(1, 1, 1, 1.0, 1.0, 1.0)
    ops = build_operators(m)
    g = -ops.div_dual.T.toarray()
    for col in g.T:
        assert np.abs(ops.curl @ col).max() == 0


def test_reduced_gradient_full_column_rank():
    m = FitMesh(4, 4, 4, 1.0, 1.0, 1.0)
    ops = build_operators(m)
    st = ops.div_dual_reduced.T.toarray()
    assert numeric_rank(st) == ops.n_psi == m.n_nodes - 1


# ---- materials ---------------------------------------------------------


def test_homogeneous_mu_entries():
    m = FitMesh(3, 3, 3, 0.2, 0.2, 0.2)
    mats = build_materials(m, MaterialMap(sigma=np.zeros(27), mu=np.full(27, MU0)))
    expect = MU0 * m.edge_dual_area / m.edge_length
    assert np.allclose(mats.m_mu, expect, rtol=1e-14)
    assert np.all(mats.m_mu > 0) and np.all(mats.m_nu > 0)


def test_zero_conductivity_gives_zero_sigma_matrix():
    m = FitMesh(2, 2, 2, 1.0, 1.0, 1.0)
    mats = build_materials(m, MaterialMap(sigma=np.zeros(8), mu=np.full(8, MU0)))
    assert np.all(mats.m_sigma == 0.0)
    assert np.all(mats.m_rho == 0.0)


def test_two_halfspace_interface_mean():
    # 2x1x1 cells split at x=1: mu1 left, mu2 right; the edge on the shared
    # face averages the two cells with equal area weights
    m = FitMesh(2, 1, 1, 1.0, 1.0, 1.0)
    mu1, mu2 = 2.0 * MU0, 6.0 * MU0
    mats = build_materials(m, MaterialMap(sigma=np.zeros(2), mu=np.array([mu1, mu2])))
    e = int(m.edge_id(1, 1, 0, 0))  # y-edge on the interface plane
    dual_area = m.edge_dual_area[e]
    expected = 0.5 * (mu1 + mu2) * dual_area / m.edge_length[e]
    assert np.isclose(mats.m_mu[e], expected, rtol=1e-14)


def test_sigma_psd_kernel_is_nonconducting_edges():
    m = FitMesh(2, 2, 2, 1.0, 1.0, 1.0)
    sigma = np.zeros(8)
    sigma[int(m.cell_id(1, 1, 1))] = 3.5e7
    mats = build_materials(m, MaterialMap(sigma=sigma, mu=np.full(8, MU0)))
    conducting_edges = m.region_edge_mask(sigma > 0)
    assert np.all(mats.m_sigma[conducting_edges] > 0)
    assert np.all(mats.m_sigma[~conducting_edges] == 0)


# ---- windings ----------------------------------------------------------


def _square_coil_model(n=4):
    m = FitMesh(n, n, n, 1.0 / n, 1.0 / n, 1.0 / n)
    ops = build_operators(m)
    c = n // 2
    coil = CoilSpec((c, c, c, c), 0, 1, c, 25.0)
    wf = build_windings(m, ops, [coil])
    return m, ops, coil, wf


def test_source_current_divergence_free():
    m, ops, coil, wf = _square_coil_model()
    assert np.abs(ops.div @ wf.j_s).max() == 0.0
    # dual divergence of the dual-facet currents vanishes identically too
    assert np.abs(ops.div_dual @ wf.x_s).max() == 0.0


def test_two_disjoint_coils_have_disjoint_supports():
    m = FitMesh(6, 3, 3, 0.1, 0.1, 0.1)
    ops = build_operators(m)
    coils = [
        CoilSpec((1, 1, 1, 2), 0, 3, 1, 10.0),
        CoilSpec((4, 1, 5, 2), 0, 3, 1, 10.0),
    ]
    wf = build_windings(m, ops, coils)
    support = np.abs(wf.x_s) > 0
    assert not np.any(support[:, 0] & support[:, 1])
    ysup = np.abs(wf.y_s) > 0
    assert not np.any(ysup[:, 0] & ysup[:, 1])


def test_cut_plane_current_equals_turns():
    m, ops, coil, wf = _square_coil_model()
    assert np.isclose(cut_plane_current(m, wf, 0, coil), coil.turns, rtol=1e-12)


def test_overlapping_coils_rejected():
    m = FitMesh(4, 4, 4, 0.1, 0.1, 0.1)
    ops = build_operators(m)
    coils = [CoilSpec((2, 2, 2, 2), 0, 1, 2, 10.0), CoilSpec((2, 2, 2, 2), 0, 1, 2, 10.0)]
    with pytest.raises(ValueError, match="overlap"):
        build_windings(m, ops, coils)


def test_coil_overlapping_conductor_rejected():
    m = FitMesh(4, 4, 4, 0.1, 0.1, 0.1)
    ops = build_operators(m)
    conducting = m.cell_box_mask((1, 1, 0, 3, 3, 1))
    with pytest.raises(ValueError, match="conduct"):
        build_windings(m, ops, [CoilSpec((2, 2, 2, 2), 0, 1, 2, 10.0)], conducting=conducting)


def test_coil_outside_mesh_rejected():
    m = FitMesh(2, 2, 2, 1.0, 1.0, 1.0)
    ops = build_operators(m)
    with pytest.raises(ValueError, match="z range"):
        build_windings(m, ops, [CoilSpec((1, 1, 1, 1), 0, 3, 1, 10.0)])
    with pytest.raises(ValueError, match="cross-section"):
        build_windings(m, ops, [CoilSpec((1, 1, 3, 3), 0, 1, 1, 10.0)])


# ---- B-H law -----------------------------------------------------------


def test_shipped_curve_passes_probes():
    rep = probe_bh(SaturatingBH(1000.0, 500.0))
    assert rep.ok, rep.checks
    assert rep.worst_slope_ratio >= 1.0 - 1e-12


def test_violating_curve_fails_probes():
    rep = probe_bh(SaturatingBH(1000.0, 500.0, mu_rinf=2.0))
    assert not rep.checks["f' -> mu0"]


def test_linear_material_differential_equals_chord():
    m = FitMesh(2, 2, 2, 0.5, 0.5, 0.5)
    mats = build_materials(m, MaterialMap(sigma=np.zeros(8), mu=np.full(8, 3.0 * MU0)))
    curve = LinearBH(3.0 * MU0)
    rng = np.random.default_rng(1)
    h = rng.standard_normal(m.n_edges)
    assert np.allclose(differential_mu_matrix(m, curve, h), mats.m_mu, rtol=1e-14)


def test_zero_field_differential_is_initial_chord():
    m = FitMesh(2, 2, 2, 0.5, 0.5, 0.5)
    curve = SaturatingBH(1000.0, 500.0)
    d = differential_mu_matrix(m, curve, np.zeros(m.n_edges))
    expect = 1000.0 * MU0 * m.edge_dual_area / m.edge_length
    assert np.allclose(d, expect, rtol=1e-12)


def test_differential_slope_matches_finite_difference():
    curve = SaturatingBH(1000.0, 500.0)
    s = np.logspace(-1, 5, 40)
    fd = (curve.b(s + 1e-3) - curve.b(s - 1e-3)) / 2e-3
    assert np.allclose(curve.db_dh(s), fd, rtol=1e-6)


def test_bh_inverse_round_trip():
    curve = SaturatingBH(1000.0, 500.0)
    h = np.concatenate([np.logspace(-2, 6, 30), -np.logspace(-2, 6, 30), [0.0]])
    b = curve.b(h)
    back = curve.h_of_b(b)
    assert np.allclose(back, h, rtol=1e-10, atol=1e-12)


def test_differential_matrices_spd_on_random_fields(rng):
    m = FitMesh(2, 2, 2, 0.5, 0.5, 0.5)
    curve = SaturatingBH(1000.0, 500.0)
    for _ in range(20):
        h = rng.standard_normal(m.n_edges) * 10.0 ** rng.integers(-2, 5)
        assert np.all(differential_mu_matrix(m, curve, h) > 0)
        b = rng.standard_normal(m.n_facets) * 10.0 ** rng.integers(-6, 1)
        assert np.all(differential_nu_matrix(m, curve, b) > 0)


def test_non_finite_field_rejected():
    m = FitMesh(1, 1, 1, 1.0, 1.0, 1.0)
    curve = SaturatingBH(10.0, 100.0)
    bad = np.zeros(m.n_edges)
    bad[0] = np.nan
    with pytest.raises(ValueError, match="non-finite"):
        differential_mu_matrix(m, curve, bad)
