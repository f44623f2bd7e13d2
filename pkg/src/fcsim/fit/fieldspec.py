"""Field specification files and the assembled field model.

Key-value text format, one `key = value` per line, `#` comments::

    grid.nx = 4            grid.dx = 0.01      (ny/nz, dy/dz likewise)
    conductor.box = 1,1,2,3,3,3                 cell index box [x0,x1)x[y0,y1)x[z0,z1)
    conductor.sigma = 3.5e7
    coil.1.frame = 2,2,2,2,0,1,2                wx0,wy0,wx1,wy1,z0,z1,width
    coil.1.turns = 100
    material.mu_r = 1.0
    material.bh = linear | brauer:<mu_ri>,<h0>,<mu_rinf>
    formulation = tomega | astar

The coil frame names the membrane window in node coordinates (a degenerate
box gives a pyramid profile), the extruded cell layers [z0,z1), and the ramp
width in cells.  Omitting conductor.box (or an empty box) leaves the whole
domain non-conducting.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import cached_property

import numpy as np

from .mesh import FitMesh
from .materials import (
    MU0,
    BHCurve,
    LinearBH,
    MaterialMap,
    MaterialMatrices,
    SaturatingBH,
    build_materials,
)
from .operators import DiscreteOperators, build_operators
from .windings import CoilSpec, WindingFunctions, build_windings


class FieldSpecError(ValueError):
    pass


@dataclass(frozen=True)
class FieldSpec:
    nx: int
    ny: int
    nz: int
    dx: float
    dy: float
    dz: float
    conductor_box: tuple[int, int, int, int, int, int] | None
    sigma: float
    coils: tuple[CoilSpec, ...]
    mu_r: float
    bh: str  # "linear" or "brauer:<mu_ri>,<h0>,<mu_rinf>"
    formulation: str  # "tomega" | "astar"

    @property
    def n_coils(self) -> int:
        return len(self.coils)

    def bh_curve(self) -> BHCurve:
        if self.bh == "linear":
            return LinearBH(self.mu_r * MU0)
        if self.bh.startswith("brauer:"):
            parts = self.bh[len("brauer:") :].split(",")
            if len(parts) != 3:
                raise FieldSpecError("material.bh brauer form takes three parameters")
            mu_ri, h0, mu_rinf = (float(p) for p in parts)
            return SaturatingBH(mu_ri, h0, mu_rinf)
        raise FieldSpecError(f"unknown material.bh {self.bh!r}")


def parse_fieldspec(text: str) -> FieldSpec:
    kv: dict[str, str] = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise FieldSpecError(f"line {lineno}: expected `key = value`, got {raw!r}")
        key, val = (s.strip() for s in line.split("=", 1))
        if not key or not val:
            raise FieldSpecError(f"line {lineno}: empty key or value")
        if key in kv:
            raise FieldSpecError(f"line {lineno}: duplicate key {key!r}")
        kv[key] = val

    def take(key: str, default: str | None = None) -> str:
        if key in kv:
            return kv.pop(key)
        if default is not None:
            return default
        raise FieldSpecError(f"missing required key {key!r}")

    def take_int(key: str) -> int:
        v = take(key)
        try:
            return int(v)
        except ValueError:
            raise FieldSpecError(f"{key}: expected integer, got {v!r}") from None

    def take_float(key: str, default: str | None = None) -> float:
        v = take(key, default)
        try:
            return float(v)
        except ValueError:
            raise FieldSpecError(f"{key}: expected number, got {v!r}") from None

    nx, ny, nz = take_int("grid.nx"), take_int("grid.ny"), take_int("grid.nz")
    dx, dy, dz = take_float("grid.dx"), take_float("grid.dy"), take_float("grid.dz")

    box = None
    if "conductor.box" in kv:
        parts = [s.strip() for s in take("conductor.box").split(",")]
        if len(parts) != 6:
            raise FieldSpecError("conductor.box takes x0,y0,z0,x1,y1,z1")
        x0, y0, z0, x1, y1, z1 = (int(p) for p in parts)
        if (x0, y0, z0) != (x1, y1, z1):
            if not (0 <= x0 < x1 <= nx and 0 <= y0 < y1 <= ny and 0 <= z0 < z1 <= nz):
                raise FieldSpecError("conductor.box outside the grid or inverted")
            box = (x0, y0, z0, x1, y1, z1)
    sigma = take_float("conductor.sigma", "0")
    if box is not None and sigma <= 0:
        raise FieldSpecError("conductor.box given but conductor.sigma not positive")

    coils = []
    k = 1
    while f"coil.{k}.frame" in kv:
        parts = [s.strip() for s in take(f"coil.{k}.frame").split(",")]
        if len(parts) != 7:
            raise FieldSpecError(f"coil.{k}.frame takes wx0,wy0,wx1,wy1,z0,z1,width")
        wx0, wy0, wx1, wy1 = (float(p) for p in parts[:4])
        z0, z1 = int(parts[4]), int(parts[5])
        width = float(parts[6])
        turns = take_float(f"coil.{k}.turns")
        coils.append(CoilSpec((wx0, wy0, wx1, wy1), z0, z1, width, turns))
        k += 1
    if not coils:
        raise FieldSpecError("at least one coil.<k>.frame is required")

    mu_r = take_float("material.mu_r", "1.0")
    bh = take("material.bh", "linear")
    formulation = take("formulation")
    if formulation not in ("tomega", "astar"):
        raise FieldSpecError(f"formulation must be tomega or astar, got {formulation!r}")
    if kv:
        raise FieldSpecError(f"unknown keys: {', '.join(sorted(kv))}")

    return FieldSpec(nx, ny, nz, dx, dy, dz, box, sigma, tuple(coils), mu_r, bh, formulation)


@dataclass(frozen=True)
class FitModel:
    """Everything the field formulations need, assembled once per spec."""

    spec: FieldSpec
    mesh: FitMesh
    ops: DiscreteOperators
    mats: MaterialMatrices
    windings: WindingFunctions
    conducting_cells: np.ndarray
    bh: BHCurve

    @cached_property
    def conducting_edge_mask(self) -> np.ndarray:
        return self.mats.m_sigma > 0


def build_fit_model(spec: FieldSpec, psi_pin: int | None = None) -> FitModel:
    """Mesh, operators, materials and windings for a field spec.

    The scalar-potential pin node defaults to the lowest node of the
    conducting region (the conductor tree root by the builder convention in
    `formulations`), or node 0 without a conductor.
    """
    mesh = FitMesh(spec.nx, spec.ny, spec.nz, spec.dx, spec.dy, spec.dz)
    conducting = (
        mesh.cell_box_mask(spec.conductor_box)
        if spec.conductor_box is not None
        else np.zeros(mesh.n_cells, dtype=bool)
    )
    if psi_pin is None:
        if conducting.any():
            x0, y0, z0, _, _, _ = spec.conductor_box
            psi_pin = int(mesh.node_id(x0, y0, z0))
        else:
            psi_pin = 0
    ops = build_operators(mesh, psi_pin=psi_pin)

    sigma = np.where(conducting, spec.sigma, 0.0)
    mu = np.full(mesh.n_cells, spec.mu_r * MU0)
    mats = build_materials(mesh, MaterialMap(sigma=sigma, mu=mu))
    windings = build_windings(mesh, ops, list(spec.coils), conducting=conducting)
    return FitModel(
        spec=spec,
        mesh=mesh,
        ops=ops,
        mats=mats,
        windings=windings,
        conducting_cells=conducting,
        bh=spec.bh_curve(),
    )
