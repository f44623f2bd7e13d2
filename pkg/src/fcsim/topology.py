"""Circuit graph topology: incidence blocks, kernel projectors, and the
topological DAE index classification with cutset/loop witnesses.

The reduced incidence matrix drops the ground row.  Branch orientation is
node_plus -> node_minus: +1 in the node_plus row, -1 in the node_minus row
(entries for the ground node are simply absent).  A k-port field branch
contributes k columns to the X block, one per terminal pair.

Classification rule: the coupled MNA system with inductance-like elements
has index 1 exactly when there is neither a cutset made of only inductors,
current sources and field elements (equivalently ker(A_R A_C A_V)^T = {0}),
nor a loop of capacitors and voltage sources only (ker Q_C^T A_V = {0});
otherwise index 2.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .linalg import cokernel_projector, kernel_basis, numeric_rank
from .netlist import NetlistDocument

_BLOCK_KINDS = ("C", "R", "L", "V", "I", "X")

_WITNESS_TOL = 1e-9


@dataclass(frozen=True)
class IncidenceBlocks:
    """Reduced incidence matrix split by device kind.

    ``columns[kind]`` names each column as (branch_name, port_index); for
    lumped kinds the port index is always 0.
    """

    nodes: tuple[str, ...]  # non-ground nodes, row order
    ground: str
    blocks: dict[str, np.ndarray]
    columns: dict[str, tuple[tuple[str, int], ...]]

    @property
    def n_nodes(self) -> int:
        return len(self.nodes)

    def block(self, *kinds: str) -> np.ndarray:
        """Horizontal concatenation of the requested kind blocks."""
        mats = [self.blocks[k] for k in kinds]
        return np.hstack(mats) if mats else np.zeros((self.n_nodes, 0))

    @property
    def a_c(self) -> np.ndarray:
        return self.blocks["C"]

    @property
    def a_r(self) -> np.ndarray:
        return self.blocks["R"]

    @property
    def a_l(self) -> np.ndarray:
        return self.blocks["L"]

    @property
    def a_v(self) -> np.ndarray:
        return self.blocks["V"]

    @property
    def a_i(self) -> np.ndarray:
        return self.blocks["I"]

    @property
    def a_x(self) -> np.ndarray:
        return self.blocks["X"]

    @property
    def full(self) -> np.ndarray:
        return self.block(*_BLOCK_KINDS)


@dataclass(frozen=True)
class Projector:
    """Symmetric idempotent Q onto ker(M^T) for the source block(s)."""

    q: np.ndarray
    source: str = ""

    @property
    def p(self) -> np.ndarray:
        return np.eye(self.q.shape[0]) - self.q

    @property
    def rank(self) -> int:
        return int(round(np.trace(self.q)))


def incidence_blocks(doc: NetlistDocument) -> IncidenceBlocks:
    """Build the reduced incidence blocks; rejects graphs disconnected from ground.

    MNA with an unreachable subgraph has a structurally singular system, so
    that is reported here rather than at solve time.
    """
    non_ground = doc.non_ground_nodes
    row = {n: i for i, n in enumerate(non_ground)}
    n_e = len(non_ground)

    blocks: dict[str, list[np.ndarray]] = {k: [] for k in _BLOCK_KINDS}
    columns: dict[str, list[tuple[str, int]]] = {k: [] for k in _BLOCK_KINDS}
    for b in doc.branches:
        for k in range(b.n_ports):
            p, m = b.port(k)
            col = np.zeros(n_e)
            if p != doc.ground:
                col[row[p]] = 1.0
            if m != doc.ground:
                col[row[m]] = -1.0
            blocks[b.kind].append(col)
            columns[b.kind].append((b.name, k))

    out = {
        k: (np.column_stack(v) if v else np.zeros((n_e, 0))) for k, v in blocks.items()
    }

    # connectivity to ground over the full branch graph
    adj: dict[str, set[str]] = {n: set() for n in doc.nodes}
    for b in doc.branches:
        for k in range(b.n_ports):
            p, m = b.port(k)
            adj[p].add(m)
            adj[m].add(p)
    reached = {doc.ground}
    stack = [doc.ground]
    while stack:
        for nxt in adj[stack.pop()]:
            if nxt not in reached:
                reached.add(nxt)
                stack.append(nxt)
    missing = [n for n in doc.nodes if n not in reached]
    if missing:
        raise ValueError(f"nodes disconnected from ground: {', '.join(missing)}")

    return IncidenceBlocks(non_ground, doc.ground, out, {k: tuple(v) for k, v in columns.items()})


def kernel_projector(m: np.ndarray, source: str = "") -> Projector:
    """Orthogonal projector onto ker(M^T); Q = I for an empty/zero block."""
    return Projector(cokernel_projector(m), source)


@dataclass(frozen=True)
class WellPosedReport:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def check_well_posed(b: IncidenceBlocks) -> WellPosedReport:
    """Well-posedness: no pure current-source cutsets, no voltage-source loops.

    Positive definiteness of the lumped G, L, C maps is structural (the
    netlist grammar rejects non-positive values), so only the two kernel
    conditions are checked numerically.
    """
    violations = []
    stack = b.block("R", "C", "V", "L", "X")
    if numeric_rank(stack) < b.n_nodes:
        violations.append(
            "cutset of current sources only: ker(A_R A_C A_V A_L A_X)^T != {0}"
        )
    a_v = b.a_v
    if a_v.shape[1] and numeric_rank(a_v) < a_v.shape[1]:
        violations.append("loop of voltage sources only: ker A_V != {0}")
    return WellPosedReport(not violations, tuple(violations))


@dataclass(frozen=True)
class IndexReport:
    index: int
    well_posed: bool
    violations: tuple[str, ...] = ()
    li_lambda_cutsets: tuple[frozenset[str], ...] = ()
    cv_loops: tuple[frozenset[str], ...] = ()
    index2_node_components: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))
    index2_vsource_components: np.ndarray = field(default_factory=lambda: np.zeros((0, 0)))

    def to_text(self) -> str:
        lines = [f"differential index: {self.index}"]
        lines.append(f"well posed: {'yes' if self.well_posed else 'no'}")
        for v in self.violations:
            lines.append(f"  violated: {v}")
        if self.li_lambda_cutsets:
            for w in self.li_lambda_cutsets:
                lines.append(f"LI-lambda cutset: {{{', '.join(sorted(w))}}}")
        if self.cv_loops:
            for w in self.cv_loops:
                lines.append(f"CV loop: {{{', '.join(sorted(w))}}}")
        if self.index == 1:
            lines.append("no LI-lambda cutsets, no CV loops")
        k1 = self.index2_node_components.shape[1] if self.index2_node_components.size else 0
        k2 = (
            self.index2_vsource_components.shape[1]
            if self.index2_vsource_components.size
            else 0
        )
        lines.append(f"index-2 node components: {k1}")
        lines.append(f"index-2 voltage-source components: {k2}")
        return "\n".join(lines)

    def to_kv(self) -> str:
        kv = [
            ("index", str(self.index)),
            ("well_posed", "true" if self.well_posed else "false"),
            ("violations", ";".join(self.violations)),
            (
                "li_lambda_cutsets",
                ";".join(",".join(sorted(w)) for w in self.li_lambda_cutsets),
            ),
            ("cv_loops", ";".join(",".join(sorted(w)) for w in self.cv_loops)),
            (
                "index2_node_components",
                str(self.index2_node_components.shape[1] if self.index2_node_components.size else 0),
            ),
            (
                "index2_vsource_components",
                str(
                    self.index2_vsource_components.shape[1]
                    if self.index2_vsource_components.size
                    else 0
                ),
            ),
        ]
        return "\n".join(f"{k} = {v}" for k, v in kv)


def _cutset_witnesses(b: IncidenceBlocks) -> tuple[frozenset[str], ...]:
    """One branch set per kernel basis vector of (A_C A_R A_V)^T.

    Each kernel vector is a node weighting; the witness is the set of L/I/X
    branches crossing its cut (nonzero weight difference).  When the kernel
    is multi-dimensional no minimality is claimed, a basis is reported.
    """
    ker = kernel_basis(b.block("C", "R", "V").T)
    witnesses = []
    for j in range(ker.shape[1]):
        u = ker[:, j]
        names: set[str] = set()
        for kind in ("L", "I", "X"):
            a = b.blocks[kind]
            if a.shape[1] == 0:
                continue
            cross = a.T @ u
            for c, (name, _port) in zip(cross, b.columns[kind]):
                if abs(c) > _WITNESS_TOL:
                    names.add(name)
        witnesses.append(frozenset(names))
    # deterministic order, drop duplicates/empties
    uniq = sorted({w for w in witnesses if w}, key=lambda s: sorted(s))
    return tuple(uniq)


def _loop_close_through_c(
    b: IncidenceBlocks, v_names: list[str], doc_like_edges: list[tuple[str, str, str]]
) -> frozenset[str]:
    """Close a CV loop: BFS through C branches (and the other selected V
    branches) between the endpoints of the lexicographically first V branch.

    Neighbors are expanded in sorted branch-name order so the reported loop
    is deterministic; ties resolve to the smallest branch-name set.
    """
    v_names_sorted = sorted(v_names)
    first = v_names_sorted[0]
    edges = [e for e in doc_like_edges if e[0] != first]
    start = end = None
    for name, p, m in doc_like_edges:
        if name == first:
            start, end = p, m
            break
    adj: dict[str, list[tuple[str, str]]] = {}
    for name, p, m in edges:
        adj.setdefault(p, []).append((name, m))
        adj.setdefault(m, []).append((name, p))
    for v in adj.values():
        v.sort()
    frontier = [(start, ())]
    seen = {start}
    while frontier:
        nxt = []
        for node, path in frontier:
            if node == end:
                return frozenset({first, *path})
            for name, other in adj.get(node, ()):
                if other not in seen:
                    seen.add(other)
                    nxt.append((other, (*path, name)))
        frontier = nxt
    return frozenset({first, *v_names_sorted[1:]})  # no closing C path: V-only loop


def _cv_loop_witnesses(b: IncidenceBlocks, doc: NetlistDocument | None) -> tuple[frozenset[str], ...]:
    q_c = kernel_projector(b.a_c, "C").q
    a_v = b.a_v
    if a_v.shape[1] == 0:
        return ()
    ker = kernel_basis(q_c @ a_v, scale=1.0)
    if ker.shape[1] == 0:
        return ()
    edges = []
    if doc is not None:
        for br in doc.branches:
            if br.kind in ("C", "V"):
                edges.append((br.name, br.node_plus, br.node_minus))
    witnesses = []
    for j in range(ker.shape[1]):
        y = ker[:, j]
        v_names = [
            name
            for yj, (name, _port) in zip(y, b.columns["V"])
            if abs(yj) > _WITNESS_TOL
        ]
        if not v_names:
            continue
        if doc is not None:
            selected = set(v_names)
            c_names = {e[0] for e in edges} - {name for name, _ in b.columns["V"]}
            usable = [e for e in edges if e[0] in selected or e[0] in c_names]
            witnesses.append(_loop_close_through_c(b, v_names, usable))
        else:
            witnesses.append(frozenset(v_names))
    uniq = sorted({w for w in witnesses if w}, key=lambda s: sorted(s))
    return tuple(uniq)


def index2_components(b: IncidenceBlocks) -> tuple[Projector, Projector]:
    """(Q_CRV, Qbar_{V-C}): projectors locating the linear index-2 components.

    Q_CRV projects node potentials onto ker(A_C A_R A_V)^T (potentials inside
    LIX cutsets); Qbar_{V-C} projects voltage-source currents onto
    ker(Q_C^T A_V) (currents of sources inside CV loops).
    """
    q_crv = kernel_projector(b.block("C", "R", "V"), "CRV")
    q_c = kernel_projector(b.a_c, "C")
    m = q_c.q @ b.a_v
    ker = kernel_basis(m, scale=1.0)
    qbar = Projector(ker @ ker.T if ker.size else np.zeros((b.a_v.shape[1],) * 2), "V-C")
    return q_crv, qbar


def classify_index(b: IncidenceBlocks, doc: NetlistDocument | None = None) -> IndexReport:
    """Topological index classification with witnesses.

    Passing the source document enables loop closure through capacitor
    branches in the CV-loop witnesses; without it only the voltage-source
    members are reported.
    """
    wp = check_well_posed(b)
    if not wp.ok:
        raise ValueError("circuit is not well posed: " + "; ".join(wp.violations))

    cond_cutset = numeric_rank(b.block("C", "R", "V")) == b.n_nodes
    q_c = kernel_projector(b.a_c, "C").q
    a_v = b.a_v
    # the projected block is a product of unit-scale matrices; anchor the
    # rank threshold at that scale so a numerically-zero product ranks 0
    cond_loop = a_v.shape[1] == 0 or numeric_rank(q_c @ a_v, scale=1.0) == a_v.shape[1]

    cutsets = () if cond_cutset else _cutset_witnesses(b)
    loops = () if cond_loop else _cv_loop_witnesses(b, doc)
    q_crv, qbar = index2_components(b)

    idx = 1 if (cond_cutset and cond_loop) else 2
    return IndexReport(
        index=idx,
        well_posed=True,
        li_lambda_cutsets=cutsets,
        cv_loops=loops,
        index2_node_components=kernel_basis(b.block("C", "R", "V").T),
        index2_vsource_components=kernel_basis(q_c @ a_v, scale=1.0)
        if a_v.shape[1]
        else np.zeros((0, 0)),
    )
