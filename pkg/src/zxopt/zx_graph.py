"""Core ZX-diagram data structure, phase arithmetic and graph-like normalization.

Phases are stored as integers k in [0, 8), meaning an angle of k*pi/4.  This keeps
all Clifford+T arithmetic exact and makes the Clifford/Pauli predicates trivial.

A diagram is an undirected graph of spiders and boundary vertices with at most one
typed wire per vertex pair.  The *graph-like* form is the normal form used by every
rewrite in this package: all spiders are Z, all spider-spider wires are Hadamard,
there are no self-loops or parallel wires, and every boundary has degree one.
Rewrites may leave a Hadamard wire on a boundary (it reads as an H gate on that
leg); :func:`to_graph_like` always restores plain boundary wires.
"""

from __future__ import annotations

import json
from collections import deque
from enum import Enum
from typing import Iterator

PHASE_MOD = 8


def is_clifford_phase(k: int) -> bool:
    return k % 2 == 0


def is_proper_clifford_phase(k: int) -> bool:
    """True for +-pi/2, the local-complementation phases."""
    return k % PHASE_MOD in (2, 6)


def is_pauli_phase(k: int) -> bool:
    return k % PHASE_MOD in (0, 4)


class VertexKind(Enum):
    Z = "Z"
    X = "X"
    BOUNDARY = "B"


class EdgeType(Enum):
    SIMPLE = "S"
    HADAMARD = "H"


def toggled(t: EdgeType) -> EdgeType:
    return EdgeType.SIMPLE if t is EdgeType.HADAMARD else EdgeType.HADAMARD


class DiagramError(Exception):
    """Structural violation in a ZX-diagram operation."""


class ZxDiagram:
    """Undirected graph of spiders/boundaries with at most one typed wire per pair.

    Vertex ids are never reused within a diagram lifetime and all iteration
    methods yield ascending ids, so identical diagrams produce identical
    traversals.
    """

    def __init__(self) -> None:
        self._kind: dict[int, VertexKind] = {}
        self._phase: dict[int, int] = {}
        self._adj: dict[int, dict[int, EdgeType]] = {}
        self.inputs: list[int] = []
        self.outputs: list[int] = []
        self._next_id = 0

    # -- construction ------------------------------------------------------

    def add_vertex(self, kind: VertexKind, phase: int = 0) -> int:
        if kind is VertexKind.BOUNDARY and phase % PHASE_MOD != 0:
            raise DiagramError("boundary vertices carry no phase")
        v = self._next_id
        self._next_id += 1
        self._kind[v] = kind
        self._phase[v] = phase % PHASE_MOD
        self._adj[v] = {}
        return v

    def add_edge(self, u: int, v: int, etype: EdgeType) -> None:
        if u not in self._kind or v not in self._kind:
            raise DiagramError(f"edge references missing vertex ({u}, {v})")
        if v in self._adj[u]:
            raise DiagramError(f"parallel edge ({u}, {v}); resolve before adding")
        self._adj[u][v] = etype
        if u != v:
            self._adj[v][u] = etype

    def remove_edge(self, u: int, v: int) -> None:
        del self._adj[u][v]
        if u != v:
            del self._adj[v][u]

    def remove_vertex(self, v: int) -> None:
        for w in list(self._adj[v]):
            self.remove_edge(v, w)
        del self._adj[v]
        del self._kind[v]
        del self._phase[v]

    # -- queries -----------------------------------------------------------

    def __contains__(self, v: int) -> bool:
        return v in self._kind

    def vertices(self) -> list[int]:
        return sorted(self._kind)

    def spiders(self) -> list[int]:
        return sorted(v for v, k in self._kind.items() if k is not VertexKind.BOUNDARY)

    def edges(self) -> Iterator[tuple[int, int, EdgeType]]:
        for u in sorted(self._adj):
            for v in sorted(self._adj[u]):
                if u <= v:
                    yield u, v, self._adj[u][v]

    def num_vertices(self) -> int:
        return len(self._kind)

    def num_edges(self) -> int:
        return sum(1 for _ in self.edges())

    def kind(self, v: int) -> VertexKind:
        return self._kind[v]

    def is_boundary(self, v: int) -> bool:
        return self._kind[v] is VertexKind.BOUNDARY

    def phase(self, v: int) -> int:
        return self._phase[v]

    def set_phase(self, v: int, k: int) -> None:
        self._phase[v] = k % PHASE_MOD

    def add_to_phase(self, v: int, k: int) -> None:
        self._phase[v] = (self._phase[v] + k) % PHASE_MOD

    def neighbors(self, v: int) -> list[int]:
        return sorted(self._adj[v])

    def degree(self, v: int) -> int:
        return len(self._adj[v])

    def has_edge(self, u: int, v: int) -> bool:
        return v in self._adj[u]

    def edge_type(self, u: int, v: int) -> EdgeType:
        return self._adj[u][v]

    def set_edge_type(self, u: int, v: int, etype: EdgeType) -> None:
        self._adj[u][v] = etype
        if u != v:
            self._adj[v][u] = etype

    def toggle_hadamard_edge(self, u: int, v: int) -> None:
        """Add the Hadamard edge (u, v) if absent, remove it if present."""
        if self.has_edge(u, v):
            self.remove_edge(u, v)
        else:
            self.add_edge(u, v, EdgeType.HADAMARD)

    def boundary_neighbors(self, v: int) -> list[int]:
        return [w for w in self.neighbors(v) if self.is_boundary(w)]

    def is_interior(self, v: int) -> bool:
        """Spider with no boundary neighbor."""
        return not self.is_boundary(v) and not any(
            self.is_boundary(w) for w in self._adj[v]
        )

    def interior_spiders(self) -> list[int]:
        return [v for v in self.spiders() if self.is_interior(v)]

    def copy(self) -> "ZxDiagram":
        d = ZxDiagram()
        d._kind = dict(self._kind)
        d._phase = dict(self._phase)
        d._adj = {v: dict(nbrs) for v, nbrs in self._adj.items()}
        d.inputs = list(self.inputs)
        d.outputs = list(self.outputs)
        d._next_id = self._next_id
        return d

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, ZxDiagram):
            return NotImplemented
        return (
            self._kind == other._kind
            and self._phase == other._phase
            and self._adj == other._adj
            and self.inputs == other.inputs
            and self.outputs == other.outputs
        )


# -- diagram builders ------------------------------------------------------


def new_diagram(n_qubits: int) -> ZxDiagram:
    """Identity diagram: per qubit, input and output boundaries wired through two
    phase-0 spiders so that no spider touches more than one boundary."""
    if n_qubits < 1:
        raise DiagramError("n_qubits must be >= 1")
    d = ZxDiagram()
    for _ in range(n_qubits):
        b_in = d.add_vertex(VertexKind.BOUNDARY)
        s1 = d.add_vertex(VertexKind.Z)
        s2 = d.add_vertex(VertexKind.Z)
        b_out = d.add_vertex(VertexKind.BOUNDARY)
        d.add_edge(b_in, s1, EdgeType.SIMPLE)
        d.add_edge(s1, s2, EdgeType.SIMPLE)
        d.add_edge(s2, b_out, EdgeType.SIMPLE)
        d.inputs.append(b_in)
        d.outputs.append(b_out)
    return d


# -- graph-like predicate --------------------------------------------------


def is_graph_like(d: ZxDiagram, strict_boundary_wires: bool = True) -> bool:
    """Check the graph-like conditions.

    With ``strict_boundary_wires`` every boundary wire must be Simple; without
    it a Hadamard boundary wire is tolerated (rewrites produce those, they read
    as an H gate on the open leg).
    """
    for v in d.vertices():
        if d.has_edge(v, v):
            return False
        if d.is_boundary(v):
            if d.degree(v) != 1:
                return False
            (w,) = d.neighbors(v)
            if d.is_boundary(w):
                return False
            if strict_boundary_wires and d.edge_type(v, w) is not EdgeType.SIMPLE:
                return False
        else:
            if d.kind(v) is not VertexKind.Z:
                return False
            if len(d.boundary_neighbors(v)) > 1:
                return False
    for u, v, t in d.edges():
        if not d.is_boundary(u) and not d.is_boundary(v):
            if t is not EdgeType.HADAMARD:
                return False
    if set(d.inputs) & set(d.outputs):
        return False
    return True


# -- fusion / normalization ------------------------------------------------


def _resolve_self_loop(d: ZxDiagram, v: int) -> None:
    if d.has_edge(v, v):
        if d.edge_type(v, v) is EdgeType.HADAMARD:
            d.add_to_phase(v, 4)
        d.remove_edge(v, v)


def fuse_into(d: ZxDiagram, u: int, v: int) -> None:
    """Fuse spider ``v`` into spider ``u`` along their Simple edge (f-rule).

    Parallel wires created by the merge resolve by the hh-rule (two Hadamard
    wires annihilate) and the Hadamard self-loop rule (one Simple plus one
    Hadamard wire fuse with a pi phase flip).
    """
    if d.edge_type(u, v) is not EdgeType.SIMPLE:
        raise DiagramError("fusion requires a Simple edge")
    d.remove_edge(u, v)
    d.add_to_phase(u, d.phase(v))
    for w in list(d._adj[v]):
        t = d.edge_type(v, w)
        d.remove_edge(v, w)
        if w == v:
            if t is EdgeType.HADAMARD:
                d.add_to_phase(u, 4)
            continue
        if w == u:
            # second wire between the fusing pair
            if t is EdgeType.HADAMARD:
                d.add_to_phase(u, 4)
            continue
        if not d.has_edge(u, w):
            d.add_edge(u, w, t)
        else:
            have = d.edge_type(u, w)
            if have is EdgeType.HADAMARD and t is EdgeType.HADAMARD:
                d.remove_edge(u, w)  # hh-cancellation
            elif have is EdgeType.SIMPLE and t is EdgeType.SIMPLE:
                pass  # extra Simple wire is idempotent under fusion
            else:
                # Simple + Hadamard pair: fusing along the Simple wire turns
                # the Hadamard wire into a self-loop, i.e. a pi flip.  Both
                # endpoints are spiders headed for fusion anyway.
                d.set_edge_type(u, w, EdgeType.SIMPLE)
                d.add_to_phase(u, 4)
    d.remove_vertex(v)


def _split_boundary_wire(d: ZxDiagram, b: int, w: int) -> int:
    """Insert a phase-0 spider on the boundary wire (b, w), preserving the wire
    semantics; returns the new spider.  The new boundary wire is Simple."""
    t = d.edge_type(b, w)
    d.remove_edge(b, w)
    s = d.add_vertex(VertexKind.Z)
    if t is EdgeType.HADAMARD:
        # H = plain wire into s, Hadamard wire out
        d.add_edge(b, s, EdgeType.SIMPLE)
        d.add_edge(s, w, EdgeType.HADAMARD)
    else:
        # identity = two Hadamard wires in sequence
        s2 = d.add_vertex(VertexKind.Z)
        d.add_edge(b, s, EdgeType.SIMPLE)
        d.add_edge(s, s2, EdgeType.HADAMARD)
        d.add_edge(s2, w, EdgeType.HADAMARD)
    return s


def to_graph_like(d: ZxDiagram) -> ZxDiagram:
    """Return an equivalent diagram in graph-like form (strict boundary wires)."""
    g = d.copy()

    # h-rule: turn every X spider into a Z spider by toggling incident wires
    for v in g.vertices():
        if g.kind(v) is VertexKind.X:
            for w in g.neighbors(v):
                if w != v:  # a self-loop picks up a Hadamard on both ends
                    g.set_edge_type(v, w, toggled(g.edge_type(v, w)))
            g._kind[v] = VertexKind.Z

    for v in g.vertices():
        _resolve_self_loop(g, v)

    # f-rule: fuse every Simple spider-spider wire away
    work = deque(
        (u, v)
        for u, v, t in g.edges()
        if t is EdgeType.SIMPLE and not g.is_boundary(u) and not g.is_boundary(v)
    )
    while work:
        u, v = work.popleft()
        if u not in g or v not in g or not g.has_edge(u, v):
            continue
        if g.edge_type(u, v) is not EdgeType.SIMPLE:
            continue
        fuse_into(g, u, v)
        for w in g.neighbors(u):
            if (
                w != u
                and g.edge_type(u, w) is EdgeType.SIMPLE
                and not g.is_boundary(w)
            ):
                work.append((u, w))

    # drop isolated spiders (scalar factors are not tracked)
    for v in g.spiders():
        if g.degree(v) == 0:
            g.remove_vertex(v)

    # restore boundary conditions
    for b in list(g.inputs) + list(g.outputs):
        (w,) = g.neighbors(b)
        if g.is_boundary(w):
            # bare boundary-boundary wire; build it out of spiders
            t = g.edge_type(b, w)
            g.remove_edge(b, w)
            s1 = g.add_vertex(VertexKind.Z)
            s2 = g.add_vertex(VertexKind.Z)
            g.add_edge(b, s1, EdgeType.SIMPLE)
            g.add_edge(s2, w, EdgeType.SIMPLE)
            if t is EdgeType.HADAMARD:
                g.add_edge(s1, s2, EdgeType.HADAMARD)
            else:
                s3 = g.add_vertex(VertexKind.Z)
                g.add_edge(s1, s3, EdgeType.HADAMARD)
                g.add_edge(s3, s2, EdgeType.HADAMARD)
        elif g.edge_type(b, w) is EdgeType.HADAMARD:
            _split_boundary_wire(g, b, w)

    # at most one boundary per spider
    for s in g.spiders():
        bs = g.boundary_neighbors(s)
        for b in bs[1:]:
            g.remove_edge(b, s)
            s1 = g.add_vertex(VertexKind.Z)
            s2 = g.add_vertex(VertexKind.Z)
            g.add_edge(b, s1, EdgeType.SIMPLE)
            g.add_edge(s1, s2, EdgeType.HADAMARD)
            g.add_edge(s2, s, EdgeType.HADAMARD)
    return g


# -- serialization ---------------------------------------------------------


class ParseError(Exception):
    """Malformed diagram or circuit document."""


def serialize(d: ZxDiagram) -> str:
    doc = {
        "vertices": [[v, d.kind(v).value, d.phase(v)] for v in d.vertices()],
        "edges": [[u, v, t.value] for u, v, t in d.edges()],
        "inputs": list(d.inputs),
        "outputs": list(d.outputs),
    }
    return json.dumps(doc, indent=1)


def deserialize(text: str) -> ZxDiagram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid diagram document: line {exc.lineno}: {exc.msg}")
    if not isinstance(doc, dict):
        raise ParseError("diagram document must be an object")
    for field in ("vertices", "edges", "inputs", "outputs"):
        if field not in doc:
            raise ParseError(f"missing field '{field}'")
    d = ZxDiagram()
    kinds = {k.value: k for k in VertexKind}
    etypes = {t.value: t for t in EdgeType}
    seen: set[int] = set()
    for entry in doc["vertices"]:
        try:
            v, kind, phase = entry
            v = int(v)
            phase = int(phase)
        except (TypeError, ValueError):
            raise ParseError(f"bad vertex entry {entry!r}")
        if kind not in kinds:
            raise ParseError(f"vertex {v}: unknown kind {kind!r}")
        if v in seen:
            raise ParseError(f"duplicate vertex id {v}")
        seen.add(v)
        d._kind[v] = kinds[kind]
        d._phase[v] = phase % PHASE_MOD
        d._adj[v] = {}
        d._next_id = max(d._next_id, v + 1)
    for entry in doc["edges"]:
        try:
            u, v, t = entry
            u = int(u)
            v = int(v)
        except (TypeError, ValueError):
            raise ParseError(f"bad edge entry {entry!r}")
        if u not in seen or v not in seen:
            raise ParseError(f"edge ({u}, {v}) references missing vertex")
        if t not in etypes:
            raise ParseError(f"edge ({u}, {v}): unknown type {t!r}")
        try:
            d.add_edge(u, v, etypes[t])
        except DiagramError as exc:
            raise ParseError(str(exc))
    for name in ("inputs", "outputs"):
        for b in doc[name]:
            if b not in seen or d._kind[int(b)] is not VertexKind.BOUNDARY:
                raise ParseError(f"{name} entry {b} is not a boundary vertex")
    d.inputs = [int(b) for b in doc["inputs"]]
    d.outputs = [int(b) for b in doc["outputs"]]
    if set(d.inputs) & set(d.outputs):
        raise ParseError("inputs and outputs overlap")
    return d
