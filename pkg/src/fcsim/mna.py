"""Assembly of the coupled MNA differential-algebraic system.

Unknown ordering: node potentials e (non-ground, document order), inductor
currents i_L, source currents i_V, then per field branch its internal state
x and port currents i in netlist order.  Residual rows follow the same
ordering: KCL per node, one row per inductor, one per voltage source, then
the element rows.

Sign conventions: branch current flows node_plus -> node_minus through the
device, so KCL sums A i with the +1 in the node_plus row; a DC voltage
source driving a 1 ohm resistor yields i_V = -1 (the current leaves the
positive terminal into the circuit).
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .elements import GeneralizedElement
from .netlist import NetlistDocument
from .topology import IncidenceBlocks, incidence_blocks


@dataclass(frozen=True)
class ElementSlot:
    name: str
    element: GeneralizedElement
    x_slice: slice
    i_slice: slice
    rows: slice
    a_cols: np.ndarray  # (n_e, n_ports) incidence columns of this branch


class CoupledDaeSystem:
    """Residual / Jacobian evaluator F(dx/dt, x, t) = 0 for the coupled DAE.

    Immutable after construction; residual evaluations on distinct state
    vectors are safe to run concurrently.
    """

    def __init__(self, doc: NetlistDocument, elements: dict[str, GeneralizedElement]):
        self.doc = doc
        self.blocks: IncidenceBlocks = incidence_blocks(doc)
        n_e = self.blocks.n_nodes

        l_branches = doc.branches_of("L")
        v_branches = doc.branches_of("V")
        i_branches = doc.branches_of("I")
        x_branches = doc.branches_of("X")

        for b in x_branches:
            if b.name not in elements:
                raise ValueError(f"field branch {b.name!r} has no bound element")
            el = elements[b.name]
            if el.n_ports != b.n_ports:
                raise ValueError(
                    f"field branch {b.name!r} has {b.n_ports} port(s) but the bound "
                    f"element expects {el.n_ports}"
                )

        self.e_slice = slice(0, n_e)
        n = n_e
        self.il_slice = slice(n, n + len(l_branches))
        n += len(l_branches)
        self.iv_slice = slice(n, n + len(v_branches))
        n += len(v_branches)

        row = n_e + len(l_branches) + len(v_branches)
        self.slots: list[ElementSlot] = []
        col_iter = iter(range(self.blocks.a_x.shape[1]))
        for b in x_branches:
            el = elements[b.name]
            cols = [next(col_iter) for _ in range(b.n_ports)]
            a_cols = self.blocks.a_x[:, cols]
            x_sl = slice(n, n + el.n_dof)
            n += el.n_dof
            i_sl = slice(n, n + el.n_ports)
            n += el.n_ports
            rows = slice(row, row + el.n_rows)
            row += el.n_rows
            self.slots.append(ElementSlot(b.name, el, x_sl, i_sl, rows, a_cols))
        self.n = n
        self.l_branches = l_branches
        self.v_branches = v_branches
        self.i_branches = i_branches
        self.x_branches = x_branches

        # constant circuit stamps (element rows filled per evaluation)
        e0 = np.zeros((n, n))
        a0 = np.zeros((n, n))
        a_c, a_r, a_l, a_v = (
            self.blocks.a_c,
            self.blocks.a_r,
            self.blocks.a_l,
            self.blocks.a_v,
        )
        c_vals = np.array([b.value for b in doc.branches_of("C")])
        g_vals = np.array([1.0 / b.value for b in doc.branches_of("R")])
        l_vals = np.array([b.value for b in l_branches])
        if c_vals.size:
            e0[self.e_slice, self.e_slice] = a_c @ np.diag(c_vals) @ a_c.T
        if g_vals.size:
            a0[self.e_slice, self.e_slice] = a_r @ np.diag(g_vals) @ a_r.T
        a0[self.e_slice, self.il_slice] = a_l
        a0[self.e_slice, self.iv_slice] = a_v
        for slot in self.slots:
            a0[self.e_slice, slot.i_slice] = slot.a_cols
        if l_vals.size:
            e0[self.il_slice, self.il_slice] = np.diag(l_vals)
            a0[self.il_slice, self.e_slice] = -a_l.T
        a0[self.iv_slice, self.e_slice] = a_v.T
        self._e0 = e0
        self._a0 = a0
        self.is_linear = all(s.element.is_linear for s in self.slots)
        if self.is_linear:
            self._e_lin, self._a_lin = self._fill_jacobians(
                np.zeros(n), np.zeros(n), 0.0, copy=True
            )

    # ---- evaluation ---------------------------------------------------

    def source(self, t: float) -> np.ndarray:
        """Time-dependent source contribution s(t); residual = E x' + A x + s."""
        s = np.zeros(self.n)
        a_i = self.blocks.a_i
        for j, b in enumerate(self.i_branches):
            s[self.e_slice] += a_i[:, j] * b.waveform.value(t)
        iv0 = self.iv_slice.start
        for j, b in enumerate(self.v_branches):
            s[iv0 + j] = -b.waveform.value(t)
        return s

    def residual(self, xdot: np.ndarray, x: np.ndarray, t: float) -> np.ndarray:
        r = self._e0 @ xdot + self._a0 @ x + self.source(t)
        e = x[self.e_slice]
        for slot in self.slots:
            el = slot.element
            v = slot.a_cols.T @ e
            r[slot.rows] = el.residual(
                xdot[slot.x_slice],
                xdot[slot.i_slice],
                x[slot.x_slice],
                x[slot.i_slice],
                v,
                t,
            )
        return r

    def _fill_jacobians(self, xdot, x, t, copy=True):
        e_mat = self._e0.copy()
        a_mat = self._a0.copy()
        e_vec = x[self.e_slice]
        for slot in self.slots:
            el = slot.element
            v = slot.a_cols.T @ e_vec
            jac = el.jacobians(
                xdot[slot.x_slice], xdot[slot.i_slice], x[slot.x_slice], x[slot.i_slice], v, t
            )
            e_mat[slot.rows, slot.x_slice] = jac.f_dx
            e_mat[slot.rows, slot.i_slice] = jac.f_di
            a_mat[slot.rows, slot.x_slice] = jac.f_x
            a_mat[slot.rows, slot.i_slice] = jac.f_i
            a_mat[slot.rows, self.e_slice] = jac.f_v @ slot.a_cols.T
        return e_mat, a_mat

    def jacobians(self, xdot: np.ndarray, x: np.ndarray, t: float) -> tuple[np.ndarray, np.ndarray]:
        """(E, A) = (dF/dx', dF/dx) at the given point."""
        if self.is_linear:
            return self._e_lin, self._a_lin
        return self._fill_jacobians(xdot, x, t)

    # ---- outputs ------------------------------------------------------

    def output_columns(self) -> list[tuple[str, int]]:
        """(column name, state index) pairs: node potentials, branch and port
        currents; port voltages are appended separately by the solver."""
        cols: list[tuple[str, int]] = []
        for j, name in enumerate(self.blocks.nodes):
            cols.append((f"e_{name}", self.e_slice.start + j))
        for j, b in enumerate(self.l_branches):
            cols.append((f"i_{b.name}", self.il_slice.start + j))
        for j, b in enumerate(self.v_branches):
            cols.append((f"i_{b.name}", self.iv_slice.start + j))
        for slot in self.slots:
            for k in range(slot.element.n_ports):
                suffix = f"_{k + 1}" if slot.element.n_ports > 1 else ""
                cols.append((f"i_{slot.name}{suffix}", slot.i_slice.start + k))
        return cols

    def port_voltage_columns(self) -> list[tuple[str, np.ndarray]]:
        """(column name, row of A_x^T) giving v = a . e per field port."""
        cols = []
        for slot in self.slots:
            for k in range(slot.element.n_ports):
                suffix = f"_{k + 1}" if slot.element.n_ports > 1 else ""
                cols.append((f"v_{slot.name}{suffix}", slot.a_cols[:, k].copy()))
        return cols


def assemble(
    doc: NetlistDocument, elements: dict[str, GeneralizedElement] | None = None
) -> CoupledDaeSystem:
    """Build the coupled DAE for a parsed netlist and its bound field elements."""
    return CoupledDaeSystem(doc, elements or {})
