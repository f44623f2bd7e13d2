"""Diagonal FIT material matrices and the nonlinear B-H material law.

Edge-based matrices (permeability, conductivity) average the cell values of
the up-to-four cells around an edge weighted by their dual-facet area share,
then multiply by dual-area/edge-length.  Facet-based matrices (reluctivity,
resistivity) combine the two cells crossed by the dual edge in series,
weighted by the half-lengths, divided by the facet area.  Resistivity only
counts conducting cells; its entries vanish on facets without a conducting
neighbor, and the gauged conductor system never touches those rows.

The shipped saturating B-H law is

    b(h) = mu0*h + (mu_ri - 1)*mu0*h0*arctan(h/h0)

with initial relative permeability mu_ri and knee field h0.  Its derivative
decays monotonically from mu_ri*mu0 to mu0, so the physical curve probes
(b(0) = 0, b' >= mu0, b' -> mu0) hold for any mu_ri >= 1.  A rational
mu(h) = mu0 + (mu_ri-1)*mu0/(1+(h/h0)^2) form was considered first but its
chord slope drops below mu0 beyond the knee for every parameter choice, so
the arctan primitive of that same rational permeability profile is used
instead.
"""

from __future__ import annotations

import abc
from dataclasses import dataclass

import numpy as np

from .mesh import FitMesh

MU0 = 4.0e-7 * np.pi


@dataclass(frozen=True)
class MaterialMap:
    """Per-cell conductivity (S/m, >= 0) and permeability (H/m, > 0)."""

    sigma: np.ndarray
    mu: np.ndarray

    def __post_init__(self):
        if np.any(self.sigma < 0):
            raise ValueError("conductivity must be nonnegative")
        if np.any(self.mu <= 0):
            raise ValueError("permeability must be positive")

    @property
    def conducting(self) -> np.ndarray:
        return self.sigma > 0


@dataclass(frozen=True)
class MaterialMatrices:
    """Diagonals of the four material matrices (edge or facet indexed)."""

    m_mu: np.ndarray  # edges
    m_sigma: np.ndarray  # edges
    m_nu: np.ndarray  # facets
    m_rho: np.ndarray  # facets


def _edge_average(mesh: FitMesh, cell_values: np.ndarray) -> np.ndarray:
    """Area-weighted average of cell values over the <=4 cells per edge."""
    ec = mesh.edge_cells
    present = ec >= 0
    vals = np.where(present, cell_values[np.clip(ec, 0, None)], 0.0)
    # every present cell holds one equal quadrant of the dual facet, and the
    # dual area already omits the missing quadrants at the boundary
    return vals.sum(axis=1) / np.maximum(present.sum(axis=1), 1)


def build_materials(mesh: FitMesh, mmap: MaterialMap) -> MaterialMatrices:
    if mmap.sigma.shape != (mesh.n_cells,) or mmap.mu.shape != (mesh.n_cells,):
        raise ValueError("material map must cover every cell")

    area = mesh.edge_dual_area
    length = mesh.edge_length
    mu_e = _edge_average(mesh, mmap.mu)
    sigma_e = _edge_average(mesh, mmap.sigma)
    m_mu = mu_e * area / length
    m_sigma = sigma_e * area / length

    fc = mesh.facet_cells
    present = fc >= 0
    # dual-edge halves: each present cell contributes half a spacing; at the
    # boundary only one half exists and facet_dual_length already reflects it
    d, _ = mesh.facet_table
    h_full = np.array([mesh.dx, mesh.dy, mesh.dz])[d]
    nu_cells = np.where(present, 1.0 / np.where(fc >= 0, mmap.mu[np.clip(fc, 0, None)], 1.0), 0.0)
    m_nu = (nu_cells * 0.5 * h_full[:, None]).sum(axis=1) / mesh.facet_area

    cond = mmap.conducting
    rho_cells = np.zeros_like(nu_cells)
    ok = present & cond[np.clip(fc, 0, None)]
    sig = np.where(ok, mmap.sigma[np.clip(fc, 0, None)], np.inf)
    rho_cells[ok] = 1.0 / sig[ok]
    m_rho = (rho_cells * 0.5 * h_full[:, None]).sum(axis=1) / mesh.facet_area

    return MaterialMatrices(m_mu=m_mu, m_sigma=m_sigma, m_nu=m_nu, m_rho=m_rho)


# ---- B-H law ----------------------------------------------------------


class BHCurve(abc.ABC):
    """Scalar magnetization law b = f(h), odd-extended to negative h."""

    @abc.abstractmethod
    def b(self, h: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def db_dh(self, h: np.ndarray) -> np.ndarray: ...

    @abc.abstractmethod
    def d2b_dh2(self, h: np.ndarray) -> np.ndarray: ...

    @property
    def linear(self) -> bool:
        return False

    def h_of_b(self, b: np.ndarray) -> np.ndarray:
        """Inverse map by damped Newton from the h = b/mu0 upper bound.

        The curve is strictly increasing with slope >= mu0, so the iteration
        is globally convergent and typically needs a handful of steps.
        """
        b = np.asarray(b, dtype=float)
        sign = np.sign(b)
        babs = np.abs(b)
        h = babs / MU0
        for _ in range(80):
            f = self.b(h) - babs
            h_new = h - f / self.db_dh(h)
            h_new = np.maximum(h_new, 0.0)
            if np.max(np.abs(h_new - h)) <= 1e-14 * (1.0 + np.max(h_new)):
                h = h_new
                break
            h = h_new
        return sign * h


class LinearBH(BHCurve):
    def __init__(self, mu: float):
        if mu <= 0:
            raise ValueError("permeability must be positive")
        self.mu = float(mu)

    @property
    def linear(self) -> bool:
        return True

    def b(self, h):
        return self.mu * np.asarray(h, dtype=float)

    def db_dh(self, h):
        return np.full_like(np.asarray(h, dtype=float), self.mu)

    def d2b_dh2(self, h):
        return np.zeros_like(np.asarray(h, dtype=float))

    def h_of_b(self, b):
        return np.asarray(b, dtype=float) / self.mu


class SaturatingBH(BHCurve):
    """Arctan-saturation law; parameters (mu_ri, h0, mu_rinf).

    mu_rinf must be 1 for the high-field probe b' -> mu0 to hold; it is kept
    as an explicit parameter so a violating curve can be constructed in
    tests and rejected by the probe suite.
    """

    def __init__(self, mu_ri: float, h0: float, mu_rinf: float = 1.0):
        if mu_ri < 1.0 or h0 <= 0 or mu_rinf <= 0:
            raise ValueError("need mu_ri >= 1, h0 > 0, mu_rinf > 0")
        self.mu_ri = float(mu_ri)
        self.h0 = float(h0)
        self.mu_rinf = float(mu_rinf)

    def b(self, h):
        h = np.asarray(h, dtype=float)
        return self.mu_rinf * MU0 * h + (self.mu_ri - self.mu_rinf) * MU0 * self.h0 * np.arctan(
            h / self.h0
        )

    def db_dh(self, h):
        h = np.asarray(h, dtype=float)
        return self.mu_rinf * MU0 + (self.mu_ri - self.mu_rinf) * MU0 / (1.0 + (h / self.h0) ** 2)

    def d2b_dh2(self, h):
        h = np.asarray(h, dtype=float)
        u = h / self.h0
        return -(self.mu_ri - self.mu_rinf) * MU0 * 2.0 * u / (self.h0 * (1.0 + u**2) ** 2)


@dataclass(frozen=True)
class BHProbeReport:
    ok: bool
    checks: dict[str, bool]
    worst_slope_ratio: float  # min b'/mu0 over the probe grid


def probe_bh(curve: BHCurve, s_max: float = 1.0e7, rel_tail: float = 0.01) -> BHProbeReport:
    """Physical-probe suite: f(0) = 0, f' >= mu0 on a log grid, f'(s_max) -> mu0."""
    grid = np.logspace(-3, np.log10(s_max), 200)
    slopes = curve.db_dh(grid)
    checks = {
        "f(0) = 0": bool(abs(float(curve.b(np.array([0.0]))[0])) == 0.0),
        "f' >= mu0": bool(np.all(slopes >= MU0 * (1.0 - 1e-12))),
        "f' -> mu0": bool(abs(float(curve.db_dh(np.array([s_max]))[0]) / MU0 - 1.0) <= rel_tail),
    }
    return BHProbeReport(all(checks.values()), checks, float(np.min(slopes) / MU0))


# ---- differential (Newton) material matrices --------------------------


def differential_mu_matrix(mesh: FitMesh, curve: BHCurve, h_edge: np.ndarray) -> np.ndarray:
    """Diagonal differential permeability matrix at an edge field state.

    ``h_edge`` holds line integrals; the local field magnitude per edge is
    |h|/length and the diagonal entry is b'(|H|) * dual_area/length.  The
    full rank-one tensor correction of the continuous differential
    permeability is not representable in a diagonal FIT matrix; the scalar
    differential slope keeps the matrix SPD since b' >= mu0 > 0.
    """
    h_edge = np.asarray(h_edge, dtype=float)
    if not np.all(np.isfinite(h_edge)):
        raise ValueError("non-finite field entries")
    h_local = np.abs(h_edge) / mesh.edge_length
    return curve.db_dh(h_local) * mesh.edge_dual_area / mesh.edge_length


def differential_nu_matrix(mesh: FitMesh, curve: BHCurve, b_facet: np.ndarray) -> np.ndarray:
    """Diagonal differential reluctivity matrix at a facet flux state.

    Entries are (dH/dB)(|B|) * dual_length/area with |B| = |b|/area; the
    slope of the inverse curve is 1/b'(h(B)) > 0.
    """
    b_facet = np.asarray(b_facet, dtype=float)
    if not np.all(np.isfinite(b_facet)):
        raise ValueError("non-finite field entries")
    b_local = np.abs(b_facet) / mesh.facet_area
    h_local = curve.h_of_b(b_local)
    dnu = 1.0 / curve.db_dh(np.abs(h_local))
    return dnu * mesh.facet_dual_length / mesh.facet_area
