"""Circuit representation, random generation, ZX conversion and the gate-level
peephole baseline."""

from __future__ import annotations

import random
from dataclasses import dataclass, field

from .zx_graph import (
    EdgeType,
    ParseError,
    PHASE_MOD,
    VertexKind,
    ZxDiagram,
)

GATE_NAMES = ("h", "rz", "cnot", "cz")

CLIFFORD_SET = "clifford"
CLIFFORD_T_SET = "cliffordt"


@dataclass(frozen=True)
class Gate:
    """One gate over the fixed set {H, Rz(k*pi/4), CNOT, CZ}."""

    name: str
    qubits: tuple[int, ...]
    phase_k: int = 0

    def __post_init__(self):
        if self.name not in GATE_NAMES:
            raise ValueError(f"unknown gate {self.name!r}")
        if self.name in ("cnot", "cz") and self.qubits[0] == self.qubits[1]:
            raise ValueError(f"{self.name} needs distinct qubits")

    @property
    def is_two_qubit(self) -> bool:
        return len(self.qubits) == 2


def h(q: int) -> Gate:
    return Gate("h", (q,))


def rz(q: int, k: int) -> Gate:
    return Gate("rz", (q,), k % PHASE_MOD)


def s(q: int) -> Gate:
    return rz(q, 2)


def sdg(q: int) -> Gate:
    return rz(q, 6)


def z(q: int) -> Gate:
    return rz(q, 4)


def t(q: int) -> Gate:
    return rz(q, 1)


def tdg(q: int) -> Gate:
    return rz(q, 7)


def cnot(c: int, tq: int) -> Gate:
    return Gate("cnot", (c, tq))


def cz(a: int, b: int) -> Gate:
    return Gate("cz", (a, b))


@dataclass
class Circuit:
    n_qubits: int
    gates: list[Gate] = field(default_factory=list)

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be >= 1")
        for g in self.gates:
            if any(q >= self.n_qubits or q < 0 for q in g.qubits):
                raise ValueError(f"gate {g} out of range for width {self.n_qubits}")

    def is_clifford(self) -> bool:
        return all(g.name != "rz" or g.phase_k % 2 == 0 for g in self.gates)


@dataclass(frozen=True)
class GateCounts:
    total: int
    two_qubit: int
    t_count: int
    h_count: int


def count_gates(c: Circuit) -> GateCounts:
    two = sum(1 for g in c.gates if g.is_two_qubit)
    tc = sum(1 for g in c.gates if g.name == "rz" and g.phase_k % 2 == 1)
    hc = sum(1 for g in c.gates if g.name == "h")
    return GateCounts(len(c.gates), two, tc, hc)


def random_circuit(n_qubits: int, n_gates: int, gate_set: str = CLIFFORD_SET,
                   seed: int | None = None) -> Circuit:
    """Random circuit with each gate type equally likely, qubits drawn uniformly
    without replacement.  With a single qubit, CNOT is dropped from the draw."""
    if gate_set == CLIFFORD_SET:
        types = ["s", "h", "cnot"]
    elif gate_set == CLIFFORD_T_SET:
        types = ["s", "t", "h", "cnot"]
    else:
        raise ValueError(f"unknown gate set {gate_set!r}")
    if n_qubits == 1:
        types = [x for x in types if x != "cnot"]
    rng = random.Random(seed)
    gates: list[Gate] = []
    for _ in range(n_gates):
        kind = rng.choice(types)
        if kind == "cnot":
            c, tq = rng.sample(range(n_qubits), 2)
            gates.append(cnot(c, tq))
        else:
            q = rng.randrange(n_qubits)
            if kind == "s":
                gates.append(s(q))
            elif kind == "t":
                gates.append(t(q))
            else:
                gates.append(h(q))
    return Circuit(n_qubits, gates)


# -- conversion to ZX ------------------------------------------------------


def circuit_to_diagram(c: Circuit) -> ZxDiagram:
    """Standard gate-by-gate encoding.  The output is a valid diagram but not
    necessarily graph-like."""
    d = ZxDiagram()
    cur: list[int] = []
    for _ in range(c.n_qubits):
        b = d.add_vertex(VertexKind.BOUNDARY)
        d.inputs.append(b)
        cur.append(b)

    def extend(q: int, kind: VertexKind, phase: int, etype: EdgeType) -> int:
        v = d.add_vertex(kind, phase)
        d.add_edge(cur[q], v, etype)
        cur[q] = v
        return v

    for g in c.gates:
        if g.name == "h":
            extend(g.qubits[0], VertexKind.Z, 0, EdgeType.HADAMARD)
        elif g.name == "rz":
            extend(g.qubits[0], VertexKind.Z, g.phase_k, EdgeType.SIMPLE)
        elif g.name == "cz":
            a = extend(g.qubits[0], VertexKind.Z, 0, EdgeType.SIMPLE)
            b = extend(g.qubits[1], VertexKind.Z, 0, EdgeType.SIMPLE)
            d.add_edge(a, b, EdgeType.HADAMARD)
        elif g.name == "cnot":
            a = extend(g.qubits[0], VertexKind.Z, 0, EdgeType.SIMPLE)
            b = extend(g.qubits[1], VertexKind.X, 0, EdgeType.SIMPLE)
            d.add_edge(a, b, EdgeType.SIMPLE)
    for q in range(c.n_qubits):
        b = d.add_vertex(VertexKind.BOUNDARY)
        d.add_edge(cur[q], b, EdgeType.SIMPLE)
        d.outputs.append(b)
    return d


# -- peephole baseline -----------------------------------------------------


def _diagonal_on(g: Gate, q: int) -> bool:
    if g.name == "rz" or g.name == "cz":
        return True
    if g.name == "cnot":
        return q == g.qubits[0]
    return False


def _commutes(a: Gate, b: Gate) -> bool:
    shared = set(a.qubits) & set(b.qubits)
    return all(_diagonal_on(a, q) and _diagonal_on(b, q) for q in shared)


def _try_absorb(out: list[Gate], g: Gate) -> bool:
    """Walk back through ``out`` over commuting gates looking for a cancellation
    or rotation merge for ``g``.  Mutates ``out`` and returns True on success."""
    for i in range(len(out) - 1, -1, -1):
        p = out[i]
        if not (set(p.qubits) & set(g.qubits)):
            continue
        if p.name == g.name:
            if g.name == "h" and p.qubits == g.qubits:
                del out[i]
                return True
            if g.name == "cnot" and p.qubits == g.qubits:
                del out[i]
                return True
            if g.name == "cz" and set(p.qubits) == set(g.qubits):
                del out[i]
                return True
            if g.name == "rz" and p.qubits == g.qubits:
                k = (p.phase_k + g.phase_k) % PHASE_MOD
                del out[i]
                if k != 0:
                    out.insert(i, rz(g.qubits[0], k))
                return True
        if not _commutes(p, g):
            return False
    return False


def peephole_optimize(c: Circuit) -> Circuit:
    """Fixed-point pass of adjacent-gate cancellation, Rz merging and diagonal
    commutation (Rz past CNOT controls and CZ)."""
    gates = list(c.gates)
    while True:
        out: list[Gate] = []
        changed = False
        for g in gates:
            if g.name == "rz" and g.phase_k % PHASE_MOD == 0:
                changed = True
                continue
            if _try_absorb(out, g):
                changed = True
            else:
                out.append(g)
        gates = out
        if not changed:
            break
    return Circuit(c.n_qubits, gates)


# -- text format -----------------------------------------------------------

_ALIASES = {
    "s": 2,
    "sdg": 6,
    "z": 4,
    "t": 1,
    "tdg": 7,
}


def emit_circuit(c: Circuit) -> str:
    lines = [f"qubits {c.n_qubits}"]
    for g in c.gates:
        if g.name == "rz":
            lines.append(f"rz {g.qubits[0]} {g.phase_k}")
        else:
            lines.append(f"{g.name} {' '.join(str(q) for q in g.qubits)}")
    return "\n".join(lines) + "\n"


def parse_circuit(text: str) -> Circuit:
    lines = text.splitlines()
    n_qubits = None
    gates: list[Gate] = []
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        parts = line.split()
        op, args = parts[0].lower(), parts[1:]

        def err(msg: str):
            raise ParseError(f"line {lineno}: {msg}")

        def intarg(sidx: int) -> int:
            try:
                return int(args[sidx])
            except (ValueError, IndexError):
                err(f"bad argument for '{op}'")

        if op == "qubits":
            if n_qubits is not None:
                err("duplicate 'qubits' header")
            n_qubits = intarg(0)
            if n_qubits < 1:
                err("qubit count must be >= 1")
            continue
        if n_qubits is None:
            err("missing 'qubits' header")

        def check(q: int) -> int:
            if not 0 <= q < n_qubits:
                err(f"qubit {q} out of range")
            return q

        try:
            if op == "h":
                gates.append(h(check(intarg(0))))
            elif op == "rz":
                gates.append(rz(check(intarg(0)), intarg(1)))
            elif op in _ALIASES:
                gates.append(rz(check(intarg(0)), _ALIASES[op]))
            elif op == "cnot" or op == "cx":
                gates.append(cnot(check(intarg(0)), check(intarg(1))))
            elif op == "cz":
                gates.append(cz(check(intarg(0)), check(intarg(1))))
            else:
                err(f"unknown gate mnemonic {op!r}")
        except ValueError as exc:
            err(str(exc))
    if n_qubits is None:
        raise ParseError("missing 'qubits' header")
    return Circuit(n_qubits, gates)
