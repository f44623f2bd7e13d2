"""Implicit Euler time stepping, consistent initialization, and the linear
matrix-pencil index oracle.

The pencil oracle realizes the differential-index definition for linear
constant-coefficient DAEs E x' + A x = f: the index equals the nilpotency
index of the Weierstrass form, computed here by the shuffle (rank-deflation
staircase) algorithm with the repo-wide numerical rank rule.  Differentiate
the algebraic rows, substitute, repeat; the number of rounds until E
becomes regular is the index.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg as sla
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .elements import GeneralizedElement
from .linalg import equilibrate_pencil, svd_rank
from .mna import CoupledDaeSystem

_SPARSE_CUTOFF = 500  # dense direct factorization below, sparse LU above


class SolverError(RuntimeError):
    pass


class SingularPencilError(ValueError):
    pass


@dataclass(frozen=True)
class SolverConfig:
    dt: float
    t_end: float
    t0: float = 0.0
    newton_tol: float = 1e-10
    newton_max_iter: int = 25
    init_mode: str = "consistent_algebraic"  # or "two_step_warmup" | "zero"
    init_state: np.ndarray | None = None

    def __post_init__(self):
        if not (self.dt > 0):
            raise ValueError("dt must be positive")
        if not (self.t_end > self.t0):
            raise ValueError("t_end must exceed t0")


@dataclass
class TimeSeries:
    times: np.ndarray
    columns: dict[str, np.ndarray] = field(default_factory=dict)

    def column(self, name: str) -> np.ndarray:
        return self.columns[name]

    def to_csv(self) -> str:
        names = list(self.columns)
        lines = [",".join(["time", *names])]
        cols = [self.columns[n] for n in names]
        for k, t in enumerate(self.times):
            lines.append(",".join([repr(float(t))] + [repr(float(c[k])) for c in cols]))
        return "\n".join(lines) + "\n"

    def write_csv(self, path: str) -> None:
        with open(path, "w", encoding="utf-8", newline="") as fh:
            fh.write(self.to_csv())


class _StepSolver:
    """Factorized iteration matrix E/dt + A for one step size."""

    def __init__(self, e_mat: np.ndarray, a_mat: np.ndarray, dt: float):
        j = e_mat / dt + a_mat
        self.n = j.shape[0]
        try:
            if self.n < _SPARSE_CUTOFF:
                self._lu = sla.lu_factor(j)
                self._sparse = False
            else:
                self._lu = spla.splu(sp.csc_matrix(j))
                self._sparse = True
        except (ValueError, RuntimeError, sla.LinAlgError) as exc:
            raise SolverError(
                "singular iteration matrix: check the DAE index and gauge "
                f"({exc})"
            ) from exc

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        if self._sparse:
            return self._lu.solve(rhs)
        return sla.lu_solve(self._lu, rhs)


def _newton_step(
    sys: CoupledDaeSystem,
    x_prev: np.ndarray,
    t: float,
    dt: float,
    tol: float,
    max_iter: int,
) -> np.ndarray:
    x = x_prev.copy()
    scale = None
    for _ in range(max_iter):
        xdot = (x - x_prev) / dt
        r = sys.residual(xdot, x, t)
        rn = float(np.linalg.norm(r))
        if scale is None:
            scale = max(1.0, rn)
        if rn <= tol * scale:
            return x
        e_mat, a_mat = sys.jacobians(xdot, x, t)
        step = _StepSolver(e_mat, a_mat, dt)
        delta = step.solve(r)
        # damped update: halve while the residual grows (full steps are
        # accepted near the solution, preserving quadratic convergence)
        lam = 1.0
        for _damp in range(5):
            x_try = x - lam * delta
            r_try = sys.residual((x_try - x_prev) / dt, x_try, t)
            if float(np.linalg.norm(r_try)) < rn or lam <= 1.0 / 16:
                break
            lam *= 0.5
        x = x_try
    raise SolverError(
        f"Newton did not converge at t = {t:.6g} (residual {rn:.3e}, tol {tol:.1e})"
    )


def _advance_linear(
    sys: CoupledDaeSystem, x_prev: np.ndarray, t: float, dt: float, cache: dict
) -> np.ndarray:
    if dt not in cache:
        e_mat, a_mat = sys.jacobians(x_prev * 0.0, x_prev, t)
        cache[dt] = (_StepSolver(e_mat, a_mat, dt), e_mat)
    step, e_mat = cache[dt]
    rhs = e_mat @ (x_prev / dt) - sys.source(t)
    return step.solve(rhs)


def step_once(sys, x_prev, t, dt, cfg: SolverConfig, cache: dict) -> np.ndarray:
    if sys.is_linear:
        return _advance_linear(sys, x_prev, t, dt, cache)
    return _newton_step(sys, x_prev, t, dt, cfg.newton_tol, cfg.newton_max_iter)


def consistent_init(sys: CoupledDaeSystem, cfg: SolverConfig) -> np.ndarray:
    """Initial state per the configured mode.

    consistent_algebraic solves the full residual at t0 for the state's
    algebraic components and a compatible derivative, holding differential
    components at the provided values (zero by default); valid for index-1
    systems.  two_step_warmup starts from zero two steps before t0 and takes
    two implicit Euler steps, which lands on the constraint manifold for
    systems whose index-2 components are linear.
    """
    base = (
        np.zeros(sys.n)
        if cfg.init_state is None
        else np.asarray(cfg.init_state, dtype=float).copy()
    )
    if cfg.init_mode == "zero":
        return base
    if cfg.init_mode == "two_step_warmup":
        cache: dict = {}
        x = base
        for k in (2, 1):
            x = step_once(sys, x, cfg.t0 - k * cfg.dt + cfg.dt, cfg.dt, cfg, cache)
        return x
    if cfg.init_mode != "consistent_algebraic":
        raise ValueError(f"unknown init mode {cfg.init_mode!r}")

    x = base.copy()
    for _ in range(30):
        e_mat, a_mat = sys.jacobians(np.zeros(sys.n), x, cfg.t0)
        alg_cols = np.where(~np.any(e_mat != 0.0, axis=0))[0]
        r0 = sys.residual(np.zeros(sys.n), x, cfg.t0)
        stacked = np.hstack([e_mat, a_mat[:, alg_cols]])
        sol, *_ = np.linalg.lstsq(stacked, -r0, rcond=None)
        dx_alg = sol[sys.n :]
        if alg_cols.size:
            x[alg_cols] += dx_alg
        xdot = sol[: sys.n]
        r = sys.residual(xdot, x, cfg.t0)
        if np.linalg.norm(r) <= cfg.newton_tol * max(1.0, np.linalg.norm(r0)):
            return x
        if not alg_cols.size:
            break
    if np.linalg.norm(r) > 1e-8 * max(1.0, float(np.linalg.norm(sys.source(cfg.t0)))):
        raise SolverError(
            "consistent initialization failed: algebraic constraints unsatisfiable "
            f"(residual {np.linalg.norm(r):.3e})"
        )
    return x


def implicit_euler(sys: CoupledDaeSystem, cfg: SolverConfig) -> TimeSeries:
    """Backward Euler over [t0, t_end] with exact final-time landing.

    Records node potentials, branch/port currents and field-port voltages at
    every accepted step, including the initial time.
    """
    x = consistent_init(sys, cfg)
    n_steps = int(np.ceil((cfg.t_end - cfg.t0) / cfg.dt - 1e-9))
    times = cfg.t0 + cfg.dt * np.arange(n_steps + 1)
    times[-1] = cfg.t_end

    state_cols = sys.output_columns()
    volt_cols = sys.port_voltage_columns()
    data = np.empty((n_steps + 1, len(state_cols) + len(volt_cols)))

    def record(k: int, xk: np.ndarray) -> None:
        for c, (_, idx) in enumerate(state_cols):
            data[k, c] = xk[idx]
        e = xk[sys.e_slice]
        for c, (_, a) in enumerate(volt_cols):
            data[k, len(state_cols) + c] = a @ e

    record(0, x)
    cache: dict = {}
    for k in range(1, n_steps + 1):
        dt_k = float(times[k] - times[k - 1])
        x = step_once(sys, x, float(times[k]), dt_k, cfg, cache)
        record(k, x)

    columns = {name: data[:, c] for c, (name, _) in enumerate(state_cols)}
    for c, (name, _) in enumerate(volt_cols):
        columns[name] = data[:, len(state_cols) + c]
    return TimeSeries(times=times, columns=columns)


# ---------------------------------------------------------------------
# linear pencil index oracle
# ---------------------------------------------------------------------


def pencil_index(e_mat: np.ndarray, a_mat: np.ndarray) -> int:
    """Kronecker nilpotency index of the regular pencil lam E + A.

    Shuffle algorithm: rotate rows by the SVD of E, replace the rank-deficient
    rows by the corresponding rows of A (differentiating the algebraic
    equations), zero them in A, repeat until E is regular.  The number of
    rounds is the differential index of E x' + A x = f.
    """
    e_work = np.atleast_2d(np.asarray(e_mat, dtype=float))
    a_work = np.atleast_2d(np.asarray(a_mat, dtype=float))
    if e_work.shape != a_work.shape or e_work.shape[0] != e_work.shape[1]:
        raise ValueError("pencil matrices must be square and of equal shape")
    n = e_work.shape[0]
    if n == 0:
        return 0
    e_work, a_work = equilibrate_pencil(e_work, a_work)

    regular = False
    for lam in (1.0, -0.5, np.pi / 3.0, np.e):
        if svd_rank(lam * e_work + a_work)[0] == n:
            regular = True
            break
    if not regular:
        raise SingularPencilError("pencil lam E + A appears singular for all probes")

    index = 0
    for _ in range(n + 1):
        rank, u, s, vt = svd_rank(e_work)
        if rank == n:
            return index
        e_top = s[:rank, None] * vt[:rank]
        a_rot = u.T @ a_work
        e_work = np.vstack([e_top, a_rot[rank:]])
        a_work = np.vstack([a_rot[:rank], np.zeros((n - rank, n))])
        index += 1
    raise SingularPencilError("shuffle did not terminate: pencil is singular")


def linearize(
    sys: CoupledDaeSystem,
    state: np.ndarray | None = None,
    xdot: np.ndarray | None = None,
    t: float = 0.0,
) -> tuple[np.ndarray, np.ndarray]:
    """(E, A) of the coupled system at a point (zeros by default)."""
    x = np.zeros(sys.n) if state is None else state
    dx = np.zeros(sys.n) if xdot is None else xdot
    return sys.jacobians(dx, x, t)


def element_pencil(
    element: GeneralizedElement, drive: str = "voltage"
) -> tuple[np.ndarray, np.ndarray]:
    """Pencil of the element-alone DAE with one port quantity prescribed.

    voltage-driven: unknowns (x, i), v(t) given; current-driven: unknowns
    (x, v), i(t) given.
    """
    n_dof, n_ports = element.n_dof, element.n_ports
    z = np.zeros
    jac = element.jacobians(z(n_dof), z(n_ports), z(n_dof), z(n_ports), z(n_ports), 0.0)
    if drive == "voltage":
        e_mat = np.hstack([jac.f_dx, jac.f_di])
        a_mat = np.hstack([jac.f_x, jac.f_i])
    elif drive == "current":
        e_mat = np.hstack([jac.f_dx, np.zeros((element.n_rows, n_ports))])
        a_mat = np.hstack([jac.f_x, jac.f_v])
    else:
        raise ValueError("drive must be 'voltage' or 'current'")
    return e_mat, a_mat
