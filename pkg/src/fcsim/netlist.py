"""Netlist parsing and waveform evaluation.

Grammar (one statement per line, ``#`` starts a comment, fields are
whitespace separated, directives start with a dot)::

    R <name> <n+> <n-> <value>
    C <name> <n+> <n-> <value>
    L <name> <n+> <n-> <value>
    V <name> <n+> <n-> DC <v> | SIN <amp> <freq> [<phase>] [PERT <eps> <fp>]
    I <name> <n+> <n-> DC <i> | SIN <amp> <freq> [<phase>] [PERT <eps> <fp>]
    X <name> <n+> <n-> [<n+> <n-> ...] field=<path>
    .ground <node>

Units are SI throughout; no engineering suffixes are parsed.  An ``X`` line
with 2k nodes declares a k-port field device; the port count is checked
against the referenced field spec at bind time, not here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field


class NetlistError(ValueError):
    """Parse or validation error with source position attached."""

    def __init__(self, message: str, line: int, column: int = 1):
        super().__init__(f"line {line}, col {column}: {message}")
        self.line = line
        self.column = column


@dataclass(frozen=True)
class Waveform:
    """Time-dependent source value: DC level or sine with optional perturbation.

    The perturbed waveform is ``base(t) + eps_p * sin(2*pi*f_p*t)``; with
    ``eps_p = 0`` it coincides with the base waveform.
    """

    form: str  # "DC" | "SIN"
    amplitude: float
    frequency: float = 0.0  # Hz
    phase: float = 0.0  # rad
    eps_p: float = 0.0
    f_p: float = 0.0  # Hz

    def base(self, t: float) -> float:
        if self.form == "DC":
            return self.amplitude
        return self.amplitude * math.sin(2.0 * math.pi * self.frequency * t + self.phase)

    def perturbation(self, t: float) -> float:
        if self.eps_p == 0.0:
            return 0.0
        return self.eps_p * math.sin(2.0 * math.pi * self.f_p * t)

    def value(self, t: float) -> float:
        return self.base(t) + self.perturbation(t)

    def perturbed(self, eps_p: float, f_p: float) -> "Waveform":
        """Copy with a perturbation attached (replaces any existing one)."""
        return Waveform(self.form, self.amplitude, self.frequency, self.phase, eps_p, f_p)


def evaluate_waveform(w: Waveform, t: float) -> float:
    return w.value(t)


@dataclass(frozen=True)
class Branch:
    name: str
    kind: str  # R, C, L, V, I, X
    nodes: tuple[str, ...]  # (n+, n-) pairs; 2k entries for a k-port X
    value: float | None = None
    waveform: Waveform | None = None
    spec_path: str | None = None

    @property
    def node_plus(self) -> str:
        return self.nodes[0]

    @property
    def node_minus(self) -> str:
        return self.nodes[1]

    @property
    def n_ports(self) -> int:
        return len(self.nodes) // 2

    def port(self, k: int) -> tuple[str, str]:
        return self.nodes[2 * k], self.nodes[2 * k + 1]


@dataclass(frozen=True)
class NetlistDocument:
    # Node order is canonical: first appearance scanning branches in order,
    # with the ground node appended last if no branch touches it.  This keeps
    # serialize -> parse an identity regardless of directive placement.
    nodes: tuple[str, ...]
    ground: str
    branches: tuple[Branch, ...]
    field_specs: dict[str, str] = field(default_factory=dict)  # X name -> path

    @property
    def non_ground_nodes(self) -> tuple[str, ...]:
        return tuple(n for n in self.nodes if n != self.ground)

    def branches_of(self, kind: str) -> tuple[Branch, ...]:
        return tuple(b for b in self.branches if b.kind == kind)


_KINDS = set("RCLVIX")


def _parse_float(tok: str, lineno: int, col: int, what: str) -> float:
    try:
        v = float(tok)
    except ValueError:
        raise NetlistError(f"expected a number for {what}, got {tok!r}", lineno, col) from None
    if not math.isfinite(v):
        raise NetlistError(f"{what} must be finite, got {tok!r}", lineno, col)
    return v


def _tokenize(line: str) -> list[tuple[str, int]]:
    """Tokens with 1-based column of each token start; comments stripped."""
    if "#" in line:
        line = line[: line.index("#")]
    toks = []
    col = 0
    for raw in line.split():
        col = line.index(raw, col)
        toks.append((raw, col + 1))
        col += len(raw)
    return toks


def _parse_waveform(toks: list[tuple[str, int]], lineno: int, kind_word: str) -> Waveform:
    if not toks:
        raise NetlistError(f"missing waveform for {kind_word} source", lineno)
    head, col = toks[0]
    rest = toks[1:]
    if head.upper() == "DC":
        if len(rest) != 1:
            raise NetlistError("DC takes exactly one value", lineno, col)
        return Waveform("DC", _parse_float(rest[0][0], lineno, rest[0][1], "DC value"))
    if head.upper() == "SIN":
        # SIN <amp> <freq> [<phase>] [PERT <eps> <fp>]
        args = list(rest)
        pert = (0.0, 0.0)
        for i, (tok, pcol) in enumerate(args):
            if tok.upper() == "PERT":
                ptoks = args[i + 1 :]
                if len(ptoks) != 2:
                    raise NetlistError("PERT takes <eps> <fp>", lineno, pcol)
                pert = (
                    _parse_float(ptoks[0][0], lineno, ptoks[0][1], "PERT eps"),
                    _parse_float(ptoks[1][0], lineno, ptoks[1][1], "PERT fp"),
                )
                args = args[:i]
                break
        if len(args) not in (2, 3):
            raise NetlistError("SIN takes <amp> <freq> [<phase>]", lineno, col)
        amp = _parse_float(args[0][0], lineno, args[0][1], "SIN amplitude")
        freq = _parse_float(args[1][0], lineno, args[1][1], "SIN frequency")
        phase = _parse_float(args[2][0], lineno, args[2][1], "SIN phase") if len(args) == 3 else 0.0
        return Waveform("SIN", amp, freq, phase, pert[0], pert[1])
    raise NetlistError(f"unknown waveform {head!r} (expected DC or SIN)", lineno, col)


def parse_netlist(text: str) -> NetlistDocument:
    """Parse netlist text into a validated document.

    Raises NetlistError with line/column info on the first problem found.
    """
    branches: list[Branch] = []
    names: dict[str, int] = {}
    ground: str | None = None
    ground_line = 0
    field_specs: dict[str, str] = {}

    for lineno, raw in enumerate(text.splitlines(), start=1):
        toks = _tokenize(raw)
        if not toks:
            continue
        head, hcol = toks[0]

        if head.startswith("."):
            if head == ".ground":
                if len(toks) != 2:
                    raise NetlistError(".ground takes exactly one node", lineno, hcol)
                if ground is not None:
                    raise NetlistError(
                        f"duplicate .ground (first at line {ground_line})", lineno, hcol
                    )
                ground = toks[1][0]
                ground_line = lineno
                continue
            raise NetlistError(f"unknown directive {head!r}", lineno, hcol)

        # SPICE-style device token: the first letter is the kind, the whole
        # token is the branch name (R1, Vsrc, Xcoil, ...).
        name = head
        kind = head[0].upper()
        if kind not in _KINDS:
            raise NetlistError(f"unknown device kind {head!r}", lineno, hcol)
        if len(toks) < 3:
            raise NetlistError(f"{kind} line needs at least two nodes", lineno, hcol)
        if name in names:
            raise NetlistError(
                f"duplicate branch name {name!r} (first at line {names[name]})", lineno, hcol
            )

        if kind in ("R", "C", "L"):
            if len(toks) != 4:
                raise NetlistError(
                    f"{kind} line is `{kind}<name> <n+> <n-> <value>`", lineno, hcol
                )
            np_, nm = toks[1][0], toks[2][0]
            value = _parse_float(toks[3][0], lineno, toks[3][1], f"{kind} value")
            if value <= 0.0:
                unit = {"R": "resistance", "C": "capacitance", "L": "inductance"}[kind]
                raise NetlistError(f"non-positive {unit} {value!r}", lineno, toks[3][1])
            branch = Branch(name, kind, (np_, nm), value=value)
        elif kind in ("V", "I"):
            np_, nm = toks[1][0], toks[2][0]
            wf = _parse_waveform(toks[3:], lineno, kind)
            branch = Branch(name, kind, (np_, nm), waveform=wf)
        else:  # X
            spec = None
            node_toks = []
            for tok, col in toks[1:]:
                if tok.startswith("field="):
                    spec = tok[len("field=") :]
                    if not spec:
                        raise NetlistError("empty field= path", lineno, col)
                else:
                    node_toks.append((tok, col))
            if spec is None:
                raise NetlistError("X line needs a field=<path> reference", lineno, hcol)
            if len(node_toks) < 2 or len(node_toks) % 2 != 0:
                raise NetlistError(
                    "X line needs an even number (>= 2) of nodes", lineno, hcol
                )
            branch = Branch(name, "X", tuple(t for t, _ in node_toks), spec_path=spec)
            field_specs[name] = spec

        for k in range(branch.n_ports):
            p, m = branch.port(k)
            if p == m:
                raise NetlistError(
                    f"branch {name!r} port {k + 1} connects node {p!r} to itself", lineno, hcol
                )
        names[name] = lineno
        branches.append(branch)

    if ground is None:
        raise NetlistError("missing .ground directive", max(1, text.count("\n") + 1))

    nodes: list[str] = []
    seen: set[str] = set()
    for b in branches:
        for n in b.nodes:
            if n not in seen:
                seen.add(n)
                nodes.append(n)
    if ground not in seen:
        nodes.append(ground)

    return NetlistDocument(tuple(nodes), ground, tuple(branches), field_specs)


def serialize_netlist(doc: NetlistDocument) -> str:
    """Canonical text form; parsing it back yields an identical document."""
    lines = []
    for b in doc.branches:
        if b.kind in ("R", "C", "L"):
            lines.append(f"{b.name} {b.node_plus} {b.node_minus} {b.value!r}")
        elif b.kind in ("V", "I"):
            w = b.waveform
            if w.form == "DC":
                wf = f"DC {w.amplitude!r}"
            else:
                wf = f"SIN {w.amplitude!r} {w.frequency!r} {w.phase!r}"
                if w.eps_p != 0.0 or w.f_p != 0.0:
                    wf += f" PERT {w.eps_p!r} {w.f_p!r}"
            lines.append(f"{b.name} {b.node_plus} {b.node_minus} {wf}")
        else:
            lines.append(f"{b.name} {' '.join(b.nodes)} field={b.spec_path}")
    lines.append(f".ground {doc.ground}")
    return "\n".join(lines) + "\n"
