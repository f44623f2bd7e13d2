"""Command-line entry points.

    fcsim analyze <netlist>
    fcsim simulate <netlist> --dt <s> --t-end <s> --out <csv>
    fcsim experiment perturbation <netlist> --epsilon <v> --dt-list <csv-list> --out-dir <dir>
    fcsim field verify <spec>
    fcsim field inductance <spec>

Exit codes: 0 success / well posed, 1 parse or usage failure, 2 analysis or
verification negative, 3 solver failure.
"""

from __future__ import annotations

import os
import sys as _sys

import click
import numpy as np

from .elements import verify_inductance_like
from .fit.fieldspec import FieldSpecError, build_fit_model, parse_fieldspec
from .fit.materials import probe_bh
from .fit.windings import cut_plane_current
from .formulations import (
    GaugeVerificationError,
    WindingAssumptionError,
    build_astar,
    build_tomega,
    l_lambda_astar,
    l_lambda_tomega,
    load_field_element,
)
from .mna import CoupledDaeSystem, assemble
from .netlist import NetlistDocument, NetlistError, parse_netlist
from .solver import SolverConfig, SolverError, element_pencil, implicit_euler, pencil_index
from .topology import check_well_posed, classify_index, incidence_blocks


def _read(path: str) -> str:
    with open(path, "r", encoding="utf-8") as fh:
        return fh.read()


def load_document(path: str) -> NetlistDocument:
    return parse_netlist(_read(path))


def load_system(path: str) -> tuple[NetlistDocument, CoupledDaeSystem]:
    """Parse a netlist, bind its field elements, and assemble the DAE."""
    doc = load_document(path)
    base = os.path.dirname(os.path.abspath(path))
    elements = {}
    for name, rel in doc.field_specs.items():
        spec_path = rel if os.path.isabs(rel) else os.path.join(base, rel)
        element, _fit = load_field_element(spec_path)
        elements[name] = element
    return doc, assemble(doc, elements)


@click.group()
def main() -> None:
    """Field/circuit coupled DAE simulator."""


@main.command()
@click.argument("netlist", type=click.Path(exists=True, dir_okay=False))
@click.option("--kv", is_flag=True, help="emit the machine-readable key-value block")
def analyze(netlist: str, kv: bool) -> None:
    """Classify the differential index of a circuit from its topology."""
    try:
        doc = load_document(netlist)
        blocks = incidence_blocks(doc)
    except (NetlistError, ValueError) as exc:
        click.echo(f"error: {exc}", err=True)
        _sys.exit(1)
    wp = check_well_posed(blocks)
    if not wp.ok:
        click.echo("well posed: no")
        for v in wp.violations:
            click.echo(f"  violated: {v}")
        _sys.exit(2)
    report = classify_index(blocks, doc)
    click.echo(report.to_kv() if kv else report.to_text())
    _sys.exit(0)


@main.command()
@click.argument("netlist", type=click.Path(exists=True, dir_okay=False))
@click.option("--dt", type=float, required=True, help="time step (s)")
@click.option("--t-end", type=float, required=True, help="end time (s)")
@click.option("--t0", type=float, default=0.0, show_default=True)
@click.option("--out", type=click.Path(dir_okay=False), required=True)
@click.option(
    "--init",
    type=click.Choice(["auto", "zero", "algebraic", "warmup"]),
    default="auto",
    show_default=True,
)
def simulate(netlist: str, dt: float, t_end: float, t0: float, out: str, init: str) -> None:
    """Implicit Euler transient run; writes a CSV of all output columns."""
    try:
        doc, system = load_system(netlist)
    except (NetlistError, FieldSpecError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        _sys.exit(1)
    mode = _init_mode(init, doc, system)
    try:
        series = implicit_euler(system, SolverConfig(dt=dt, t_end=t_end, t0=t0, init_mode=mode))
    except SolverError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        _sys.exit(3)
    series.write_csv(out)
    click.echo(f"wrote {out} ({series.times.size} rows)")


def _init_mode(init: str, doc: NetlistDocument, system: CoupledDaeSystem) -> str:
    if init == "zero":
        return "zero"
    if init == "algebraic":
        return "consistent_algebraic"
    if init == "warmup":
        return "two_step_warmup"
    report = classify_index(system.blocks, doc)
    return "two_step_warmup" if report.index == 2 else "consistent_algebraic"


@main.group()
def experiment() -> None:
    """Reproductions of the reference experiments."""


@experiment.command()
@click.argument("netlist", type=click.Path(exists=True, dir_okay=False))
@click.option("--epsilon", type=float, default=1e-4, show_default=True)
@click.option(
    "--dt-list",
    default="8e-5,4e-5,2e-5,1e-5",
    show_default=True,
    help="comma-separated, strictly decreasing",
)
@click.option("--out-dir", type=click.Path(file_okay=False), required=True)
@click.option("--t-end", type=float, default=0.5, show_default=True)
def perturbation(netlist: str, epsilon: float, dt_list: str, out_dir: str, t_end: float) -> None:
    """Base vs perturbed runs over a step-size sweep, with a D(dt) summary.

    The perturbation is eps * sin(2*pi*f_p*t) with f_p = 1e9 times the source
    frequency, added to the single driving source of the single field device.
    """
    try:
        dts = [float(s) for s in dt_list.split(",") if s.strip()]
    except ValueError:
        click.echo("error: bad --dt-list", err=True)
        _sys.exit(1)
    if not dts or any(b >= a for a, b in zip(dts, dts[1:])):
        click.echo("error: --dt-list must be non-empty and strictly decreasing", err=True)
        _sys.exit(1)
    try:
        result = run_perturbation_experiment(netlist, epsilon, dts, t_end, out_dir)
    except (NetlistError, FieldSpecError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        _sys.exit(1)
    except SolverError as exc:
        click.echo(f"solver failure: {exc}", err=True)
        _sys.exit(3)
    for line in result.summary_lines():
        click.echo(line)


class ExperimentResult:
    """Deviation table of one perturbation sweep."""

    def __init__(self, index: int, dts: list[float], deviations: list[float], epsilon: float):
        self.index = index
        self.dts = dts
        self.deviations = deviations
        self.epsilon = epsilon

    @property
    def ratios(self) -> list[float]:
        return [
            self.deviations[k + 1] / self.deviations[k]
            for k in range(len(self.dts) - 1)
            if self.deviations[k] > 0
        ]

    @property
    def growth_per_halving(self) -> float:
        if self.deviations[0] <= 0 or len(self.dts) < 2:
            return float("nan")
        span = self.deviations[-1] / self.deviations[0]
        octaves = np.log2(self.dts[0] / self.dts[-1])
        return float(span ** (1.0 / octaves))

    def verdict(self) -> str:
        if self.index == 1:
            bound = 10.0 * self.epsilon
            ok = all(d <= bound for d in self.deviations)
            return (
                "index-1: bounded, no dt growth"
                if ok
                else f"index-1 expected bounded deviation but max {max(self.deviations):.3e} > {bound:.1e}"
            )
        g = self.growth_per_halving
        if 1.4 <= g <= 2.6:
            return "index-2: D grows ~ 1/dt (perturbation differentiated once)"
        return f"index-2: growth factor per halving {g:.2f} (expected ~2)"

    def summary_lines(self) -> list[str]:
        lines = [f"classified index: {self.index}"]
        lines.append("dt,D")
        for dt, d in zip(self.dts, self.deviations):
            lines.append(f"{dt!r},{d!r}")
        if len(self.dts) > 1:
            lines.append(
                "halving ratios: " + ", ".join(f"{r:.3f}" for r in self.ratios)
            )
            lines.append(f"growth per halving (geometric mean): {self.growth_per_halving:.3f}")
        lines.append("verdict: " + self.verdict())
        return lines

    def summary_csv(self) -> str:
        lines = ["dt,D"]
        for dt, d in zip(self.dts, self.deviations):
            lines.append(f"{dt!r},{d!r}")
        return "\n".join(lines) + "\n"


def run_perturbation_experiment(
    netlist_path: str,
    epsilon: float,
    dts: list[float],
    t_end: float,
    out_dir: str | None,
) -> ExperimentResult:
    """Run base and perturbed transients per step size and collect D(dt).

    D(dt) is the maximum over time and over all output columns of the
    absolute deviation between the perturbed and base runs.
    """
    doc, system = load_system(netlist_path)
    if len(doc.branches_of("X")) != 1:
        raise ValueError("perturbation experiment expects exactly one field element")
    sources = [*doc.branches_of("V"), *doc.branches_of("I")]
    if len(sources) != 1:
        raise ValueError("perturbation experiment expects exactly one source")
    src = sources[0]
    if src.waveform.form != "SIN":
        raise ValueError("perturbation experiment expects a SIN source")

    base_dir = os.path.dirname(os.path.abspath(netlist_path))
    report = classify_index(system.blocks, doc)
    init_mode = "two_step_warmup" if report.index == 2 else "consistent_algebraic"

    pert_wave = src.waveform.perturbed(epsilon, src.waveform.frequency * 1e9)
    pert_doc = _with_waveform(doc, src.name, pert_wave)
    pert_system = _rebind(pert_doc, base_dir)

    if out_dir is not None:
        os.makedirs(out_dir, exist_ok=True)
    deviations = []
    for dt in dts:
        cfg = SolverConfig(dt=dt, t_end=t_end, init_mode=init_mode)
        base_series = implicit_euler(system, cfg)
        pert_series = implicit_euler(pert_system, cfg)
        dev = 0.0
        for name, col in base_series.columns.items():
            dev = max(dev, float(np.max(np.abs(pert_series.columns[name] - col))))
        deviations.append(dev)
        if out_dir is not None:
            tag = f"{dt:.6g}".replace("-", "m")
            base_series.write_csv(os.path.join(out_dir, f"base_dt{tag}.csv"))
            pert_series.write_csv(os.path.join(out_dir, f"pert_dt{tag}.csv"))

    result = ExperimentResult(report.index, dts, deviations, epsilon)
    if out_dir is not None:
        with open(os.path.join(out_dir, "summary.csv"), "w", encoding="utf-8") as fh:
            fh.write(result.summary_csv())
    return result


def _with_waveform(doc: NetlistDocument, branch_name: str, wave) -> NetlistDocument:
    from dataclasses import replace

    branches = tuple(
        replace(b, waveform=wave) if b.name == branch_name else b for b in doc.branches
    )
    return replace(doc, branches=branches)


def _rebind(doc: NetlistDocument, base_dir: str) -> CoupledDaeSystem:
    elements = {}
    for name, rel in doc.field_specs.items():
        spec_path = rel if os.path.isabs(rel) else os.path.join(base_dir, rel)
        element, _fit = load_field_element(spec_path)
        elements[name] = element
    return assemble(doc, elements)


@main.group()
def field() -> None:
    """Field-model verification and inductance extraction."""


def _load_fit(specfile: str):
    spec = parse_fieldspec(_read(specfile))
    return build_fit_model(spec)


@field.command()
@click.argument("specfile", type=click.Path(exists=True, dir_okay=False))
def verify(specfile: str) -> None:
    """Run the discretization, gauge, winding and material check suites."""
    try:
        fit = _load_fit(specfile)
    except (FieldSpecError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        _sys.exit(1)

    checks: list[tuple[str, bool, str]] = []

    def add(name: str, ok: bool, detail: str = "") -> None:
        checks.append((name, bool(ok), detail))

    exact = (fit.ops.curl @ fit.ops.div_dual_reduced.T).nnz == 0
    add("curl o gradient = 0 (integer)", exact)
    add("M_mu positive", bool(np.all(fit.mats.m_mu > 0)))
    add("M_nu positive", bool(np.all(fit.mats.m_nu > 0)))
    add("M_sigma nonnegative", bool(np.all(fit.mats.m_sigma >= 0)))

    div_j = fit.ops.div @ fit.windings.j_s
    add("source currents divergence-free", float(np.max(np.abs(div_j))) == 0.0 if div_j.size else True)
    for r, coil in enumerate(fit.spec.coils):
        total = cut_plane_current(fit.mesh, fit.windings, r, coil)
        add(
            f"coil {r + 1} ampere-turns through cut plane",
            abs(total - coil.turns) <= 1e-9 * coil.turns,
            f"{total:.6g} vs {coil.turns:.6g}",
        )

    if not fit.bh.linear:
        probe = probe_bh(fit.bh)
        for name, ok in probe.checks.items():
            add(f"B-H probe: {name}", ok)

    try:
        if fit.spec.formulation == "tomega":
            element = build_tomega(fit)
            ll = l_lambda_tomega(element)
        else:
            element = build_astar(fit)
            ll = l_lambda_astar(element)
        add("gauge verification", True)
        add("L SPD", ll.spd, f"min eigenvalue {ll.min_eigenvalue:.3e}")
        idx_v = pencil_index(*element_pencil(element, "voltage"))
        idx_i = pencil_index(*element_pencil(element, "current"))
        add("voltage-driven element index = 1", idx_v == 1, f"got {idx_v}")
        add("current-driven element index = 2", idx_i == 2, f"got {idx_i}")
        probe = verify_inductance_like(element)
        rel = np.linalg.norm(probe.l_matrix - ll.matrix) / np.linalg.norm(ll.matrix)
        add("numeric extraction matches closed form", rel <= 1e-8, f"rel err {rel:.2e}")
    except (GaugeVerificationError, WindingAssumptionError, ValueError) as exc:
        add("gauge/winding verification", False, str(exc))

    width = max(len(name) for name, _, _ in checks)
    failures = 0
    for name, ok, detail in checks:
        mark = "PASS" if ok else "FAIL"
        failures += 0 if ok else 1
        suffix = f"  ({detail})" if detail else ""
        click.echo(f"{mark}  {name:<{width}}{suffix}")
    _sys.exit(0 if failures == 0 else 2)


@field.command()
@click.argument("specfile", type=click.Path(exists=True, dir_okay=False))
def inductance(specfile: str) -> None:
    """Closed-form port inductance matrix and its smallest eigenvalue."""
    try:
        fit = _load_fit(specfile)
        if fit.spec.formulation == "tomega":
            ll = l_lambda_tomega(build_tomega(fit))
        else:
            ll = l_lambda_astar(build_astar(fit))
    except (FieldSpecError, GaugeVerificationError, WindingAssumptionError, ValueError, OSError) as exc:
        click.echo(f"error: {exc}", err=True)
        _sys.exit(1)
    click.echo(f"formulation: {ll.formulation}")
    click.echo("L (henry):")
    for row in np.atleast_2d(ll.matrix):
        click.echo("  " + "  ".join(f"{v: .12e}" for v in row))
    click.echo(f"smallest eigenvalue: {ll.min_eigenvalue:.12e}")


if __name__ == "__main__":
    main()
