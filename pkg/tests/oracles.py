"""Independent oracles used by the test suite.

These deliberately avoid the code paths they check: the port-inductance
oracles eliminate the full unreduced block systems by one dense solve of
the consistent-derivative equations (no W-matrix chain, no projector
formula), and the projector oracle goes through scipy's null_space.
"""

from __future__ import annotations

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp


def orthogonal_projector_onto_left_kernel(m: np.ndarray) -> np.ndarray:
    """Q with im Q = ker(M^T), built from an explicit null-space basis."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[1] == 0:
        return np.eye(m.shape[0])
    ns = sla.null_space(m.T)
    return ns @ ns.T


def dense_l_tomega(element) -> np.ndarray:
    """Port inductance by eliminating the full unreduced conductor system.

    At the state (t_red, psi, i) = 0 the derivative-consistent equations are
    the Gram system [P S~^T Y]^T M_mu [P S~^T Y] zdot = (0, 0, v); the port
    block of the inverse response gives L directly.
    """
    j = sp.hstack(
        [element.p, element.st_red.T, sp.csr_matrix(element.y)], format="csr"
    )
    gram = (j.T @ sp.diags(element.m_mu) @ j).toarray()
    n_s = element.n_ports
    rhs = np.zeros((gram.shape[0], n_s))
    rhs[-n_s:, :] = np.eye(n_s)
    sol = np.linalg.solve(gram, rhs)
    didt_per_v = sol[-n_s:, :]
    return np.linalg.solve(didt_per_v, np.eye(n_s))


def dense_l_astar(element) -> np.ndarray:
    """Port inductance from the differentiated constraint system of the
    gauged vector-potential element at the zero state.

    Rows: conductivity rows of the dynamic equation, the once-differentiated
    curl-curl constraint on the sigma-free rows, and the port coupling; the
    square solve yields di/dt per unit port voltage.
    """
    sig = element.m_sigma_bar
    k_nu = element.k_nu
    x_bar = element.x_bar
    n_a, n_s = k_nu.shape[0], element.n_ports
    p_rows = np.where(sig > 0)[0]
    q_rows = np.where(sig == 0)[0]

    sys_mat = np.zeros((n_a + n_s, n_a + n_s))
    rhs = np.zeros((n_a + n_s, n_s))
    r = 0
    for row in p_rows:
        sys_mat[r, :n_a] = 0.0
        sys_mat[r, row] = sig[row]
        r += 1
    for row in q_rows:
        sys_mat[r, :n_a] = k_nu[row]
        sys_mat[r, n_a:] = -x_bar[row]
        r += 1
    sys_mat[r:, :n_a] = x_bar.T
    rhs[r:, :] = np.eye(n_s)
    sol = np.linalg.solve(sys_mat, rhs)
    didt_per_v = sol[n_a:, :]
    return np.linalg.solve(didt_per_v, np.eye(n_s))


def rl_current(t: np.ndarray, r: float = 1.0, l: float = 1.0, v: float = 1.0) -> np.ndarray:
    """Analytic inductor current of the series RL circuit charged from rest."""
    return (v / r) * (1.0 - np.exp(-r * t / l))
