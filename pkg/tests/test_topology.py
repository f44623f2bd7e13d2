import numpy as np
import pytest

from fcsim.netlist import parse_netlist
from fcsim.topology import (
    check_well_posed,
    classify_index,
    incidence_blocks,
    index2_components,
    kernel_projector,
)

from oracles import orthogonal_projector_onto_left_kernel


def blocks_of(text):
    doc = parse_netlist(text)
    return doc, incidence_blocks(doc)


def test_vr_loop_single_node():
    _, b = blocks_of("V1 1 0 DC 1.0\nR1 1 0 1.0\n.ground 0\n")
    assert b.a_v.tolist() == [[1.0]]
    assert b.a_r.tolist() == [[1.0]]


def test_ladder_orientation():
    _, b = blocks_of("V1 1 0 DC 1.0\nR1 1 2 1.0\nL1 2 0 1.0\n.ground 0\n")
    assert b.a_r[:, 0].tolist() == [1.0, -1.0]
    assert b.a_l[:, 0].tolist() == [0.0, 1.0]


def test_empty_kind_has_zero_columns():
    _, b = blocks_of("V1 1 0 DC 1.0\nR1 1 0 1.0\n.ground 0\n")
    assert b.a_c.shape == (1, 0)
    assert b.full.shape == (1, 2)


def test_disconnected_graph_rejected():
    doc = parse_netlist("R1 1 0 1.0\nR2 2 3 1.0\n.ground 0\n")
    with pytest.raises(ValueError, match="disconnected"):
        incidence_blocks(doc)


# ---- projectors --------------------------------------------------------


def test_kernel_projector_frozen_example():
    m = np.array([[1.0], [-1.0]])
    q = kernel_projector(m).q
    assert np.allclose(q, 0.5 * np.ones((2, 2)), atol=1e-14)
    assert np.allclose(q, orthogonal_projector_onto_left_kernel(m), atol=1e-12)


def test_kernel_projector_full_rank_and_zero():
    assert np.allclose(kernel_projector(np.eye(3)).q, np.zeros((3, 3)), atol=1e-14)
    assert np.allclose(kernel_projector(np.zeros((2, 0))).q, np.eye(2), atol=1e-14)


def test_projector_invariants_on_circuit_blocks(rng):
    _, b = blocks_of(
        "V1 1 0 DC 1.0\nR1 1 2 1.0\nC1 2 3 1.0\nL1 3 0 1.0\nI1 2 0 DC 1.0\n.ground 0\n"
    )
    for kind in "CRLVI":
        m = b.blocks[kind]
        q = kernel_projector(m, kind).q
        scale = max(1.0, np.abs(q).max())
        assert np.abs(q @ q - q).max() <= 1e-12 * scale
        assert np.abs(q - q.T).max() <= 1e-12 * scale
        if m.shape[1]:
            assert np.abs(m.T @ q).max() <= 1e-12


# ---- well-posedness ----------------------------------------------------


def test_current_source_cutset_violation():
    _, b = blocks_of("I1 1 0 DC 1.0\n.ground 0\n")
    rep = check_well_posed(b)
    assert not rep.ok
    assert any("current sources" in v for v in rep.violations)


def test_parallel_voltage_sources_violation():
    _, b = blocks_of("V1 1 0 DC 1.0\nV2 1 0 DC 1.0\n.ground 0\n")
    rep = check_well_posed(b)
    assert not rep.ok
    assert any("voltage sources" in v for v in rep.violations)


def test_series_vrl_well_posed():
    _, b = blocks_of("V1 1 0 DC 1.0\nR1 1 2 1.0\nL1 2 0 1.0\n.ground 0\n")
    assert check_well_posed(b).ok


# ---- classification ----------------------------------------------------


def test_v_r_field_series_is_index_1():
    doc, b = blocks_of("V1 1 0 DC 1.0\nR1 1 2 1.0\nX1 2 0 field=c.fs\n.ground 0\n")
    rep = classify_index(b, doc)
    assert rep.index == 1
    assert not rep.li_lambda_cutsets and not rep.cv_loops


def test_current_driven_field_is_index_2_with_witness():
    doc, b = blocks_of("I1 1 0 DC 1.0\nX1 1 0 field=c.fs\n.ground 0\n")
    rep = classify_index(b, doc)
    assert rep.index == 2
    assert rep.li_lambda_cutsets == (frozenset({"I1", "X1"}),)


def test_cv_loop_is_index_2_with_loop_witness():
    doc, b = blocks_of("V1 1 0 DC 1.0\nC1 1 2 1.0\nC2 2 0 1.0\nR1 1 0 1.0\n.ground 0\n")
    rep = classify_index(b, doc)
    assert rep.index == 2
    assert rep.cv_loops == (frozenset({"V1", "C1", "C2"}),)


def test_index2_component_ranks():
    doc, b = blocks_of("I1 1 0 DC 1.0\nX1 1 0 field=c.fs\n.ground 0\n")
    q_crv, qbar = index2_components(b)
    assert q_crv.rank == 1
    doc2, b2 = blocks_of("V1 1 0 DC 1.0\nC1 1 0 1.0\nR1 1 0 1.0\n.ground 0\n")
    _, qbar2 = index2_components(b2)
    assert qbar2.rank == 1
    doc3, b3 = blocks_of("V1 1 0 DC 1.0\nR1 1 2 1.0\nL1 2 0 1.0\n.ground 0\n")
    q3, qbar3 = index2_components(b3)
    assert q3.rank == 0 and qbar3.rank == 0


def test_not_well_posed_rejected_by_classifier():
    _, b = blocks_of("I1 1 0 DC 1.0\n.ground 0\n")
    with pytest.raises(ValueError, match="not well posed"):
        classify_index(b)


def test_resistor_kills_cutset_witness():
    # bridging any witness branch with a resistor shrinks the kernel
    doc, b = blocks_of("I1 1 0 DC 1.0\nL1 1 2 1.0\nL2 2 0 1.0\n.ground 0\n")
    rep = classify_index(b, doc)
    assert rep.index == 2
    doc2, b2 = blocks_of(
        "I1 1 0 DC 1.0\nL1 1 2 1.0\nL2 2 0 1.0\nR1 1 2 1.0\n.ground 0\n"
    )
    rep2 = classify_index(b2, doc2)
    assert rep2.index == 2  # the I1/L2 cut remains
    remaining = set().union(*rep2.li_lambda_cutsets)
    assert "L1" not in remaining
    doc3, b3 = blocks_of(
        "I1 1 0 DC 1.0\nL1 1 2 1.0\nL2 2 0 1.0\nR1 1 2 1.0\nR2 2 0 1.0\n.ground 0\n"
    )
    assert classify_index(b3, doc3).index == 1


def test_witness_deletion_disconnects_graph():
    doc, b = blocks_of(
        "V1 1 0 DC 1.0\nR1 1 2 1.0\nL1 2 3 1.0\nI1 3 0 DC 1.0\nR2 3 0 1.0\n"
        "L2 2 4 1.0\nI2 4 0 DC 1.0\n.ground 0\n"
    )
    rep = classify_index(b, doc)
    assert rep.index == 2
    for witness in rep.li_lambda_cutsets:
        adj: dict[str, set[str]] = {n: set() for n in doc.nodes}
        for br in doc.branches:
            if br.name in witness:
                continue
            adj[br.node_plus].add(br.node_minus)
            adj[br.node_minus].add(br.node_plus)
        seen = {doc.ground}
        stack = [doc.ground]
        while stack:
            for nxt in adj[stack.pop()]:
                if nxt not in seen:
                    seen.add(nxt)
                    stack.append(nxt)
        assert seen != set(doc.nodes), f"deleting {sorted(witness)} must disconnect"


def test_report_serialization_forms():
    doc, b = blocks_of("I1 1 0 DC 1.0\nX1 1 0 field=c.fs\n.ground 0\n")
    rep = classify_index(b, doc)
    text = rep.to_text()
    assert "differential index: 2" in text
    kv = rep.to_kv()
    assert "index = 2" in kv
    assert "li_lambda_cutsets = I1,X1" in kv
