"""Inductance-like circuit elements.

An element is a multi-port device governed by a DAE residual

    F(dx/dt, di/dt, x, i, v, t) = 0

of size n_dof + n_ports, where x is the internal state, i the port currents
and v the port voltages.  The time derivative of v never enters the
signature; that structural restriction is what makes the device behave like
an inductance inside a circuit.  After at most one differentiation of the
algebraic rows, the port dynamics take the form

    di/dt = L^{-1} v + f(x, i, t)

with L symmetric positive definite, which `verify_inductance_like` extracts
numerically from the Jacobians alone.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass
from typing import Callable, NamedTuple

import numpy as np

from .linalg import svd_rank


class ElementJacobians(NamedTuple):
    """Partial derivatives of the residual w.r.t. each argument group."""

    f_dx: np.ndarray  # (m, n_dof)
    f_di: np.ndarray  # (m, n_ports)
    f_x: np.ndarray  # (m, n_dof)
    f_i: np.ndarray  # (m, n_ports)
    f_v: np.ndarray  # (m, n_ports)


class GeneralizedElement(abc.ABC):
    """Contract for a device coupled into MNA through n_ports terminal pairs."""

    n_dof: int
    n_ports: int
    is_linear: bool = True

    @property
    def n_rows(self) -> int:
        return self.n_dof + self.n_ports

    @abc.abstractmethod
    def residual(
        self,
        dx: np.ndarray,
        di: np.ndarray,
        x: np.ndarray,
        i: np.ndarray,
        v: np.ndarray,
        t: float,
    ) -> np.ndarray:
        """Residual vector of size n_dof + n_ports."""

    @abc.abstractmethod
    def jacobians(
        self,
        dx: np.ndarray,
        di: np.ndarray,
        x: np.ndarray,
        i: np.ndarray,
        v: np.ndarray,
        t: float,
    ) -> ElementJacobians:
        """Partial derivatives at the given point."""


class LinearInductorElement(GeneralizedElement):
    """Classical (multi-port) inductance:  L di/dt - v = 0,  no internal state."""

    def __init__(self, inductance: float | np.ndarray):
        l_mat = np.atleast_2d(np.asarray(inductance, dtype=float))
        if l_mat.shape[0] != l_mat.shape[1]:
            raise ValueError("inductance matrix must be square")
        if not np.allclose(l_mat, l_mat.T):
            raise ValueError("inductance matrix must be symmetric")
        if np.linalg.eigvalsh(l_mat)[0] <= 0.0:
            raise ValueError("inductance matrix must be positive definite")
        self.l_mat = l_mat
        self.n_dof = 0
        self.n_ports = l_mat.shape[0]
        k = self.n_ports
        self._jac = ElementJacobians(
            np.zeros((k, 0)), l_mat.copy(), np.zeros((k, 0)), np.zeros((k, k)), -np.eye(k)
        )

    def residual(self, dx, di, x, i, v, t):
        return self.l_mat @ di - v

    def jacobians(self, dx, di, x, i, v, t):
        return self._jac


class FluxInductorElement(GeneralizedElement):
    """Flux-formulated inductance with internal flux state Phi.

    Residual rows:  dPhi/dt - v = 0  and  Phi - phi(i, t) = 0.
    The incremental inductance is d(phi)/d(i), required SPD wherever probed.
    """

    def __init__(
        self,
        flux: Callable[[np.ndarray, float], np.ndarray],
        dflux_di: Callable[[np.ndarray, float], np.ndarray],
        n_ports: int = 1,
    ):
        self.flux = flux
        self.dflux_di = dflux_di
        self.n_ports = n_ports
        self.n_dof = n_ports
        self.is_linear = False

    def residual(self, dx, di, x, i, v, t):
        return np.concatenate([dx - v, x - np.atleast_1d(self.flux(i, t))])

    def jacobians(self, dx, di, x, i, v, t):
        k = self.n_ports
        l_mat = np.atleast_2d(self.dflux_di(i, t))
        zero = np.zeros((k, k))
        return ElementJacobians(
            f_dx=np.vstack([np.eye(k), zero]),
            f_di=np.vstack([zero, zero]),
            f_x=np.vstack([zero, np.eye(k)]),
            f_i=np.vstack([zero, -l_mat]),
            f_v=np.vstack([-np.eye(k), zero]),
        )


@dataclass(frozen=True)
class InductanceProbe:
    l_matrix: np.ndarray
    spd: bool
    min_eigenvalue: float


def verify_inductance_like(
    element: GeneralizedElement,
    x: np.ndarray | None = None,
    i: np.ndarray | None = None,
    v: np.ndarray | None = None,
    t: float = 0.0,
) -> InductanceProbe:
    """Extract L = (d(di/dt)/dv)^{-1} at an operating point.

    The element DAE's derivative-coefficient matrix is row-split by rank;
    its algebraic rows are differentiated once (a single shuffle step).  For
    a genuine inductance-like element those rows may not depend on the port
    voltage, and the resulting square system determines the sensitivity of
    the port-current derivative to v.

    Raises ValueError when the differentiated rows involve dv/dt or the
    extraction system is singular (element not inductance-like at the probe).
    """
    n_dof, n_ports = element.n_dof, element.n_ports
    m = n_dof + n_ports
    x = np.zeros(n_dof) if x is None else np.asarray(x, dtype=float)
    i = np.zeros(n_ports) if i is None else np.asarray(i, dtype=float)
    v = np.zeros(n_ports) if v is None else np.asarray(v, dtype=float)
    jac = element.jacobians(np.zeros(n_dof), np.zeros(n_ports), x, i, v, t)

    e_mat = np.hstack([jac.f_dx, jac.f_di])
    a_mat = np.hstack([jac.f_x, jac.f_i])
    b_mat = jac.f_v

    rank, u, _, _ = svd_rank(e_mat)
    rot = u.T
    e_top = (rot @ e_mat)[:rank]
    a_rot = rot @ a_mat
    b_rot = rot @ b_mat
    b_bot = b_rot[rank:]
    scale = max(1.0, float(np.max(np.abs(e_mat))), float(np.max(np.abs(a_mat))))
    if b_bot.size and np.max(np.abs(b_bot)) > 1e-10 * scale:
        raise ValueError(
            "differentiated algebraic rows depend on the port voltage: "
            "element is not inductance-like at this probe"
        )

    # square system M [dx; di] = c + D v  with D the v-sensitivity
    m_sys = np.vstack([e_top, a_rot[rank:]])
    d_rhs = np.vstack([-b_rot[:rank], np.zeros((m - rank, n_ports))])
    try:
        sens = np.linalg.solve(m_sys, d_rhs)
    except np.linalg.LinAlgError as exc:
        raise ValueError("singular extraction system: element is not inductance-like") from exc
    l_inv = sens[n_dof:, :]
    try:
        l_mat = np.linalg.solve(l_inv, np.eye(n_ports))
    except np.linalg.LinAlgError as exc:
        raise ValueError("port-current derivative not invertible in v") from exc
    l_sym = 0.5 * (l_mat + l_mat.T)
    lam = float(np.linalg.eigvalsh(l_sym)[0])
    return InductanceProbe(l_matrix=l_mat, spd=lam > 0.0, min_eigenvalue=lam)
