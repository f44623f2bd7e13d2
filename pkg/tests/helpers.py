"""Shared geometry helpers for the test suite."""

import os

CIRCUITS = os.path.join(os.path.dirname(os.path.abspath(__file__)), "..", "circuits")


def fieldspec_text(
    n: int = 2,
    *,
    formulation: str = "tomega",
    conductor: tuple[int, int, int, int, int, int] | None = (1, 1, 1, 2, 2, 2),
    sigma: float = 3.5e7,
    coil: str | None = None,
    turns: float = 100.0,
    mu_r: float = 1.0,
    bh: str = "linear",
    d: float = 0.5,
) -> str:
    """Small corner-coil test geometry, parameterized for the suites."""
    coil = coil or "0,0,1,1,0,1,1"
    lines = [
        f"grid.nx = {n}",
        f"grid.ny = {n}",
        f"grid.nz = {n}",
        f"grid.dx = {d}",
        f"grid.dy = {d}",
        f"grid.dz = {d}",
    ]
    if conductor is not None:
        x0, y0, z0, x1, y1, z1 = conductor
        lines.append(f"conductor.box = {x0},{y0},{z0},{x1},{y1},{z1}")
        lines.append(f"conductor.sigma = {sigma}")
    lines += [
        f"coil.1.frame = {coil}",
        f"coil.1.turns = {turns}",
        f"material.mu_r = {mu_r}",
        f"material.bh = {bh}",
        f"formulation = {formulation}",
    ]
    return "\n".join(lines) + "\n"


def refinement_family_text(n: int, formulation: str) -> str:
    """Full-height corner coil on the unit cube, refinable 2 -> 4 -> 8."""
    h = n // 2
    return fieldspec_text(
        n,
        formulation=formulation,
        conductor=None,
        coil=f"0,0,{h},{h},0,{n},{h}",
        d=1.0 / n,
    )
