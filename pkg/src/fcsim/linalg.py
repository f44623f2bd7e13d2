"""Shared numerical linear algebra helpers.

A single notion of numerical rank is used everywhere in the package:
a singular value counts toward the rank when it exceeds

    max(shape) * machine_eps * sigma_max.

Incidence matrices are integer-valued and could be ranked exactly, but the
same rank decisions later mix with real field matrices, so one floating
threshold is used repo-wide.
"""

from __future__ import annotations

import numpy as np


def svd_rank(
    m: np.ndarray, scale: float | None = None
) -> tuple[int, np.ndarray, np.ndarray, np.ndarray]:
    """SVD of ``m`` together with its numerical rank.

    Returns (rank, U, s, Vt).  A matrix with an empty dimension has rank 0.
    ``scale`` anchors the threshold for matrices that are themselves products
    of larger-scale factors (e.g. a projector applied to a unit incidence
    block can be pure rounding noise; its own sigma_max must not count).
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.size == 0:
        return 0, np.zeros((m.shape[0], 0)), np.zeros(0), np.zeros((0, m.shape[1]))
    u, s, vt = np.linalg.svd(m, full_matrices=True)
    if s.size == 0 or s[0] == 0.0:
        return 0, u, s, vt
    anchor = s[0] if scale is None else max(s[0], scale)
    tol = max(m.shape) * np.finfo(float).eps * anchor
    rank = int(np.sum(s > tol))
    return rank, u, s, vt


def numeric_rank(m: np.ndarray, scale: float | None = None) -> int:
    return svd_rank(m, scale)[0]


def kernel_basis(m: np.ndarray, scale: float | None = None) -> np.ndarray:
    """Orthonormal basis of the (right) null space, shape (n_cols, dim_ker)."""
    m = np.atleast_2d(np.asarray(m, dtype=float))
    if m.shape[1] == 0:
        return np.zeros((0, 0))
    if m.shape[0] == 0:
        return np.eye(m.shape[1])  # a map from R^n to R^0 kills nothing
    rank, _, _, vt = svd_rank(m, scale)
    return vt[rank:].T


def cokernel_projector(m: np.ndarray) -> np.ndarray:
    """Orthogonal projector onto ker(m^T), acting on the row space of ``m``.

    For an empty or zero block this is the identity; for a full-row-rank
    block it is the zero matrix.
    """
    m = np.atleast_2d(np.asarray(m, dtype=float))
    n = m.shape[0]
    if m.shape[1] == 0:
        return np.eye(n)
    rank, u, _, _ = svd_rank(m)
    ur = u[:, :rank]
    return np.eye(n) - ur @ ur.T


def smallest_eigenvalue(m: np.ndarray) -> float:
    """Smallest eigenvalue of a symmetric matrix (symmetrized defensively)."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return np.inf
    return float(np.linalg.eigvalsh(0.5 * (m + m.T))[0])


def is_spd(m: np.ndarray, scale: float | None = None) -> bool:
    """Positive definiteness relative to the matrix magnitude."""
    m = np.asarray(m, dtype=float)
    if m.size == 0:
        return True
    if scale is None:
        scale = max(1e-300, float(np.max(np.abs(m))))
    lam = smallest_eigenvalue(m)
    return lam > max(m.shape) * np.finfo(float).eps * scale


def equilibrate_pencil(e: np.ndarray, a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    """Power-of-two row/column scaling applied jointly to a matrix pencil.

    Diagonal scalings are strict equivalence transformations, so the
    Kronecker structure (and hence the nilpotency index) is preserved while
    magnitudes of mixed physical units are brought to a common scale.
    """
    e = np.asarray(e, dtype=float).copy()
    a = np.asarray(a, dtype=float).copy()
    mag = np.maximum(np.abs(e), np.abs(a))
    with np.errstate(divide="ignore"):
        row = np.max(mag, axis=1)
        row_scale = np.where(row > 0, np.exp2(-np.round(np.log2(row))), 1.0)
    e *= row_scale[:, None]
    a *= row_scale[:, None]
    mag = np.maximum(np.abs(e), np.abs(a))
    with np.errstate(divide="ignore"):
        col = np.max(mag, axis=0)
        col_scale = np.where(col > 0, np.exp2(-np.round(np.log2(col))), 1.0)
    e *= col_scale[None, :]
    a *= col_scale[None, :]
    return e, a
