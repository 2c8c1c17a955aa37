"""Frontier-based circuit extraction from graph-like diagrams.

The extractor consumes the diagram from the output side.  Gates are collected
in reverse order (nearest the outputs first) and the list is reversed at the
end.  Input wires are pre-normalized so that every wire into an input boundary
is a Hadamard wire; this makes the final frontier/input stage a uniform GF(2)
elimination problem.

Row operation convention: ``rows[t] ^= rows[s]`` on the frontier biadjacency
matrix is realized as a CNOT with control on the wire of ``t`` and target on
the wire of ``s`` (the roles flip across the Hadamard wires); the convention
is locked in by the oracle tests.
"""

from __future__ import annotations

import numpy as np

from .circuit_ir import Circuit, Gate, cnot, cz, h, rz
from .rewrite_rules import (
    _gadget_hub_tip,
    _gadgetize,
    _local_complement_inplace,
    _pivot_core,
)
from .zx_graph import (
    EdgeType,
    VertexKind,
    ZxDiagram,
    fuse_into,
    is_pauli_phase,
    is_proper_clifford_phase,
    to_graph_like,
)


class ExtractionStalled(Exception):
    """No frontier vertex could be advanced; the diagram has lost gflow."""


def _normalize_input_wires(g: ZxDiagram) -> None:
    """Ensure every wire into an input boundary is a Hadamard wire by inserting
    a phase-0 spider on plain wires (identity = two Hadamard wires)."""
    for b in g.inputs:
        (w,) = g.neighbors(b)
        if g.edge_type(b, w) is EdgeType.SIMPLE:
            g.remove_edge(b, w)
            mid = g.add_vertex(VertexKind.Z, 0)
            g.add_edge(b, mid, EdgeType.HADAMARD)
            g.add_edge(mid, w, EdgeType.HADAMARD)


def _shield_input_wires(g: ZxDiagram, v: int) -> None:
    """Replace every direct Hadamard wire from ``v`` to an input boundary with
    a three-Hadamard chain through two fresh spiders, so that graph rewrites at
    ``v`` only ever touch spiders."""
    for b in list(g.neighbors(v)):
        if g.is_boundary(b) and b in g.inputs:
            g.remove_edge(v, b)
            m1 = g.add_vertex(VertexKind.Z, 0)
            m2 = g.add_vertex(VertexKind.Z, 0)
            g.add_edge(b, m1, EdgeType.HADAMARD)
            g.add_edge(m1, m2, EdgeType.HADAMARD)
            g.add_edge(m2, v, EdgeType.HADAMARD)


class _Extractor:
    def __init__(self, d: ZxDiagram):
        self.g = to_graph_like(d)
        _normalize_input_wires(self.g)
        self.n = len(self.g.outputs)
        self.rev: list[Gate] = []  # gates in reverse order (output side first)
        self.frontier: list[int] = []
        self.qubit_of: dict[int, int] = {}
        for q, o in enumerate(self.g.outputs):
            (w,) = self.g.neighbors(o)
            if self.g.edge_type(o, w) is EdgeType.HADAMARD:
                self.rev.append(h(q))
                self.g.set_edge_type(o, w, EdgeType.SIMPLE)
            self.frontier.append(w)
            self.qubit_of[w] = q

    def run(self) -> Circuit:
        g = self.g
        guard = 0
        limit = 8 * g.num_vertices() + 20 * self.n + 200
        while True:
            guard += 1
            if guard > limit:
                raise ExtractionStalled("extraction failed to make progress")
            self._emit_phases_and_czs()
            if all(not self._unextracted(v) for v in self.frontier):
                break
            if self._advance_one():
                continue
            if self._gaussian_step():
                continue
            if self._cleanup_step():
                continue
            if self._gadget_pivot():
                continue
            if self._desperate_step():
                continue
            raise ExtractionStalled("no extractable frontier vertex")
        self._finalize()
        return Circuit(self.n, list(reversed(self.rev)))

    # -- helpers -----------------------------------------------------------

    def _unextracted(self, v: int) -> list[int]:
        g = self.g
        return [
            w
            for w in g.neighbors(v)
            if w not in self.qubit_of and not g.is_boundary(w)
        ]

    def _emit_phases_and_czs(self) -> None:
        g = self.g
        for q, v in enumerate(self.frontier):
            if g.phase(v) != 0:
                self.rev.append(rz(q, g.phase(v)))
                g.set_phase(v, 0)
        for q1, v1 in enumerate(self.frontier):
            for w in g.neighbors(v1):
                if w in self.qubit_of and self.qubit_of[w] > q1:
                    self.rev.append(cz(q1, self.qubit_of[w]))
                    g.remove_edge(v1, w)

    def _advance_one(self) -> bool:
        """Move one frontier vertex through its single unextracted neighbor."""
        g = self.g
        for q in range(self.n):
            v = self.frontier[q]
            nb = self._unextracted(v)
            if len(nb) != 1:
                continue
            # the wire must carry nothing else: no input legs on v
            if any(w in self.qubit_of or g.is_boundary(w)
                   for w in g.neighbors(v) if w != nb[0] and w != g.outputs[q]):
                continue
            w = nb[0]
            o = g.outputs[q]
            g.remove_vertex(v)
            del self.qubit_of[v]
            self.rev.append(h(q))  # crossing the Hadamard wire
            g.add_edge(o, w, EdgeType.SIMPLE)
            self.frontier[q] = w
            self.qubit_of[w] = q
            return True
        return False

    def _gaussian_step(self) -> bool:
        """Gauss-Jordan eliminate the frontier biadjacency (columns: unextracted
        spiders and input boundaries), emitting CNOTs and updating the diagram.
        Returns False if no row operation was performed."""
        g = self.g
        n = self.n
        cols = sorted(
            {
                w
                for v in self.frontier
                for w in g.neighbors(v)
                if w not in self.qubit_of and w not in g.outputs
            }
        )
        if not cols:
            return False
        col_idx = {w: j for j, w in enumerate(cols)}
        m = np.zeros((n, len(cols)), dtype=np.uint8)
        for q, v in enumerate(self.frontier):
            for w in g.neighbors(v):
                if w in col_idx:
                    m[q, col_idx[w]] = 1
        ops: list[tuple[int, int]] = []  # (src_row, dst_row): dst ^= src
        pivot_row = 0
        for j in range(len(cols)):
            rows = [i for i in range(pivot_row, n) if m[i, j]]
            if not rows:
                continue
            # lightest row first keeps CNOT emission low
            rows.sort(key=lambda i: (int(m[i].sum()), i))
            r = rows[0]
            if r != pivot_row:
                # row swap as three adds, to stay within CNOTs
                for src, dst in ((r, pivot_row), (pivot_row, r), (r, pivot_row)):
                    ops.append((src, dst))
                    m[dst] ^= m[src]
            for i in range(n):
                if i != pivot_row and m[i, j]:
                    ops.append((pivot_row, i))
                    m[i] ^= m[pivot_row]
            pivot_row += 1
            if pivot_row == n:
                break
        if not ops:
            return False
        for src, dst in ops:
            self.rev.append(cnot(dst, src))
        for q, v in enumerate(self.frontier):
            for w in cols:
                has = g.has_edge(v, w)
                want = bool(m[q, col_idx[w]])
                if has and not want:
                    g.remove_edge(v, w)
                elif want and not has:
                    g.add_edge(v, w, EdgeType.HADAMARD)
        return True

    def _cleanup_step(self) -> bool:
        """Remove stranded interior structure that blocks the frontier: a
        degree-1 spider with phase +-pi/2 folds into its neighbor (single-vertex
        local complementation), and a phaseless degree-2 spider is cut out.
        Arbitrary rewrite sequences (the RL action space) leave such debris."""
        g = self.g
        changed = False
        for v in g.spiders():
            if v not in g or v in self.qubit_of:
                continue
            if g.degree(v) == 1 and g.is_interior(v):
                if is_proper_clifford_phase(g.phase(v)):
                    try:
                        _local_complement_inplace(g, v)
                        changed = True
                        continue
                    except Exception:
                        pass
                elif is_pauli_phase(g.phase(v)):
                    # a Pauli tip is a parity projection: pivoting it against
                    # its host deletes both and pushes the phase outward
                    (w,) = g.neighbors(v)
                    if (not g.is_boundary(w) and w not in self.qubit_of
                            and g.edge_type(v, w) is EdgeType.HADAMARD):
                        _shield_input_wires(g, w)
                        if not is_pauli_phase(g.phase(w)):
                            _gadgetize(g, w)
                        _pivot_core(g, v, w)
                        changed = True
                        continue
            if g.phase(v) == 0 and g.degree(v) == 2 and not g.has_edge(v, v):
                a, b = g.neighbors(v)
                if g.is_boundary(a) or g.is_boundary(b):
                    continue
                if a in self.qubit_of and b in self.qubit_of:
                    continue  # would merge two frontier wires
                same = g.edge_type(v, a) == g.edge_type(v, b)
                g.remove_vertex(v)
                if not same:
                    g.toggle_hadamard_edge(a, b)
                else:
                    # plain wire: fuse b into a (keep the frontier id alive)
                    if b in self.qubit_of:
                        a, b = b, a
                    if g.has_edge(a, b):
                        g.remove_edge(a, b)
                        g.add_to_phase(a, 4)
                    g.add_edge(a, b, EdgeType.SIMPLE)
                    fuse_into(g, a, b)
                    self._refuse_simple_wires(a)
                changed = True
        return changed

    def _desperate_step(self) -> bool:
        """Only reached when every targeted step fails: fall back on generic
        simplification moves to restructure the blocked region."""
        g = self.g
        changed = False
        # eliminate any interior +-pi/2 spider outright (each local
        # complementation removes one spider, so this terminates)
        for v in g.spiders():
            if v not in g or v in self.qubit_of or not g.is_interior(v):
                continue
            if not is_proper_clifford_phase(g.phase(v)):
                continue
            try:
                _local_complement_inplace(g, v)
                changed = True
            except Exception:
                pass
        if changed:
            return True
        return self._pauli_pivot()

    def _pauli_pivot(self) -> bool:
        """Pivot a stranded non-frontier Pauli spider against a neighbor,
        gadgetizing a non-Pauli partner, exactly as the simplification loop
        does.  Candidates needing no shielding or gadgetizing come first."""
        g = self.g

        def is_gadget_part(v: int) -> bool:
            if _gadget_hub_tip(g, v) is not None:
                return True
            if g.degree(v) == 1:
                (w,) = g.neighbors(v)
                return _gadget_hub_tip(g, w) == v
            return False

        candidates = []
        for a, b, t in g.edges():
            if t is not EdgeType.HADAMARD:
                continue
            if g.is_boundary(a) or g.is_boundary(b):
                continue
            if a in self.qubit_of or b in self.qubit_of:
                continue
            for u, v in ((a, b), (b, a)):
                if not is_pauli_phase(g.phase(u)):
                    continue
                if is_gadget_part(u) or is_gadget_part(v):
                    continue
                cost = (0 if is_pauli_phase(g.phase(v)) else 1) + sum(
                    1 for x in (u, v)
                    for w in g.neighbors(x)
                    if g.is_boundary(w))
                candidates.append((cost, u, v))
                break
        if not candidates:
            return False
        _, u, v = min(candidates)
        _shield_input_wires(g, u)
        _shield_input_wires(g, v)
        if not is_pauli_phase(g.phase(v)):
            _gadgetize(g, v)
        _pivot_core(g, u, v)
        return True

    def _refuse_simple_wires(self, a: int) -> None:
        """Fusion can leave a Simple spider-spider wire behind; keep fusing
        until the neighborhood of ``a`` is Hadamard-only again."""
        g = self.g
        again = True
        while again:
            again = False
            for w in g.neighbors(a):
                if g.is_boundary(w) or g.edge_type(a, w) is not EdgeType.SIMPLE:
                    continue
                if w in self.qubit_of:
                    if a in self.qubit_of:
                        raise ExtractionStalled("cannot fuse two frontier wires")
                    fuse_into(g, w, a)
                    a = w
                else:
                    fuse_into(g, a, w)
                again = True
                break

    def _gadget_pivot(self) -> bool:
        """Unblock extraction by pivoting a frontier vertex with an adjacent
        phase gadget hub; the hub takes over the output wire."""
        g = self.g
        for q, v in enumerate(self.frontier):
            for w in g.neighbors(v):
                if w in self.qubit_of or g.is_boundary(w):
                    continue
                if _gadget_hub_tip(g, w) is None:
                    continue
                _shield_input_wires(g, v)
                _shield_input_wires(g, w)
                o = g.outputs[q]
                _pivot_core(g, w, v, v_boundary=o)
                del self.qubit_of[v]
                self.frontier[q] = w
                self.qubit_of[w] = q
                if g.edge_type(o, w) is EdgeType.HADAMARD:
                    self.rev.append(h(q))
                    g.set_edge_type(o, w, EdgeType.SIMPLE)
                return True
        return False

    def _finalize(self) -> None:
        """All frontier vertices now touch only input boundaries: reduce to a
        permutation, emit one H per wire and the swap network."""
        g = self.g
        n = self.n
        in_idx = {b: j for j, b in enumerate(g.inputs)}
        m = np.zeros((n, n), dtype=np.uint8)
        for q, v in enumerate(self.frontier):
            for w in g.neighbors(v):
                if w in in_idx:
                    m[q, in_idx[w]] = 1
                elif w != g.outputs[q]:
                    raise ExtractionStalled(f"unexpected neighbor {w} at finalization")
        work = m.copy()
        for j in range(n):
            rows = [i for i in range(n) if work[i, j] and not work[i, :j].any()]
            if not rows:
                rows = [i for i in range(n) if work[i, j]]
            if not rows:
                raise ExtractionStalled("frontier-input matrix is singular")
            r = rows[0]
            for i in range(n):
                if i != r and work[i, j]:
                    self.rev.append(cnot(i, r))
                    work[i] ^= work[r]
        perm = []
        for q in range(n):
            ones = np.flatnonzero(work[q])
            if len(ones) != 1:
                raise ExtractionStalled("frontier-input matrix is singular")
            perm.append(int(ones[0]))
        for q in range(n):
            self.rev.append(h(q))
        # realize the wire permutation with swap networks (3 CNOTs per swap)
        for q in range(n):
            while perm[q] != q:
                p = perm[q]
                self.rev.append(cnot(q, p))
                self.rev.append(cnot(p, q))
                self.rev.append(cnot(q, p))
                perm[q], perm[p] = perm[p], perm[q]


def extract(d: ZxDiagram) -> Circuit:
    """Extract an equivalent circuit over {H, Rz, CNOT, CZ}.

    The input is normalized to graph-like form first, so any valid diagram
    produced by the conversion/rewrite pipeline is accepted.

    Arbitrary rewrite sequences can strand structure the frontier walk cannot
    unpick; if direct extraction stalls, simplify to the fixed point (which is
    semantics-preserving and always extractable) and extract that instead.
    """
    try:
        return _Extractor(d).run()
    except ExtractionStalled:
        from .simplifier import reduce_all

        return _Extractor(reduce_all(d)).run()
