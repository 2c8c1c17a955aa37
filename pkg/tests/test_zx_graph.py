import numpy as np
import pytest

from conftest import diagram_matrix, same_up_to_scale
from zxopt.circuit_ir import circuit_to_diagram, random_circuit
from zxopt.zx_graph import (
    DiagramError,
    EdgeType,
    ParseError,
    VertexKind,
    ZxDiagram,
    deserialize,
    fuse_into,
    is_clifford_phase,
    is_graph_like,
    is_pauli_phase,
    is_proper_clifford_phase,
    new_diagram,
    serialize,
    to_graph_like,
    toggled,
)


def test_phase_predicates():
    assert [k for k in range(8) if is_pauli_phase(k)] == [0, 4]
    assert [k for k in range(8) if is_proper_clifford_phase(k)] == [2, 6]
    assert [k for k in range(8) if is_clifford_phase(k)] == [0, 2, 4, 6]


def test_edge_type_toggle():
    assert toggled(EdgeType.SIMPLE) is EdgeType.HADAMARD
    assert toggled(EdgeType.HADAMARD) is EdgeType.SIMPLE


def test_new_diagram_shape():
    d = new_diagram(3)
    assert len(d.inputs) == 3
    assert len(d.outputs) == 3
    for b in d.inputs + d.outputs:
        assert d.is_boundary(b)
        assert d.degree(b) == 1


def test_vertex_ids_never_reused():
    d = ZxDiagram()
    a = d.add_vertex(VertexKind.Z, 0)
    d.remove_vertex(a)
    b = d.add_vertex(VertexKind.Z, 0)
    assert b != a


def test_boundary_phase_rejected():
    d = ZxDiagram()
    with pytest.raises(DiagramError):
        d.add_vertex(VertexKind.BOUNDARY, 2)


def test_parallel_edge_rejected():
    d = ZxDiagram()
    a = d.add_vertex(VertexKind.Z, 0)
    b = d.add_vertex(VertexKind.Z, 0)
    d.add_edge(a, b, EdgeType.HADAMARD)
    with pytest.raises(DiagramError):
        d.add_edge(a, b, EdgeType.SIMPLE)


def test_phases_mod_eight():
    d = ZxDiagram()
    v = d.add_vertex(VertexKind.Z, 11)
    assert d.phase(v) == 3
    d.add_to_phase(v, 7)
    assert d.phase(v) == 2
    d.set_phase(v, -1)
    assert d.phase(v) == 7


def test_fuse_into_adds_phases():
    d = ZxDiagram()
    a = d.add_vertex(VertexKind.Z, 1)
    b = d.add_vertex(VertexKind.Z, 2)
    c = d.add_vertex(VertexKind.Z, 0)
    d.add_edge(a, b, EdgeType.SIMPLE)
    d.add_edge(b, c, EdgeType.HADAMARD)
    fuse_into(d, a, b)
    assert b not in d
    assert d.phase(a) == 3
    assert d.has_edge(a, c)


@pytest.mark.parametrize("seed", range(25))
def test_to_graph_like_invariants(seed):
    c = random_circuit(4, 20, "clifford", seed=seed)
    g = to_graph_like(circuit_to_diagram(c))
    assert is_graph_like(g)
    for v in g.spiders():
        assert g.kind(v) is VertexKind.Z
        assert not g.has_edge(v, v)
    for u, v, t in g.edges():
        if not g.is_boundary(u) and not g.is_boundary(v):
            assert t is EdgeType.HADAMARD


@pytest.mark.parametrize("seed", range(8))
def test_to_graph_like_preserves_semantics(seed):
    c = random_circuit(2, 8, "cliffordt", seed=seed)
    d = circuit_to_diagram(c)
    a = diagram_matrix(d)
    b = diagram_matrix(to_graph_like(d))
    assert same_up_to_scale(a, b)


@pytest.mark.parametrize("seed", range(10))
def test_serialize_round_trip(seed):
    c = random_circuit(3, 15, "cliffordt", seed=seed)
    g = to_graph_like(circuit_to_diagram(c))
    h = deserialize(serialize(g))
    assert h == g
    assert serialize(h) == serialize(g)


def test_deserialize_rejects_garbage():
    with pytest.raises(ParseError):
        deserialize("not a diagram")


def test_copy_is_independent():
    d = new_diagram(2)
    e = d.copy()
    v = e.add_vertex(VertexKind.Z, 1)
    assert v not in d
    assert d != e
