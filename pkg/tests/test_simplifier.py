import pytest

from conftest import diagram_matrix, same_up_to_scale
from zxopt.circuit_ir import circuit_to_diagram, random_circuit
from zxopt.extraction import extract
from zxopt.simplifier import num_interior_spiders, reduce_all
from zxopt.verifier import equivalent, equivalent_clifford
from zxopt.zx_graph import is_graph_like, new_diagram


@pytest.mark.parametrize("seed", range(40))
def test_clifford_terminal_form(seed):
    # fixed point of the Clifford rules: every remaining spider touches an
    # input or output boundary
    c = random_circuit(5 + seed % 8, 40, "clifford", seed=seed)
    g = reduce_all(circuit_to_diagram(c))
    assert num_interior_spiders(g) == 0
    assert is_graph_like(g, strict_boundary_wires=False)


@pytest.mark.parametrize("seed", range(25))
def test_reduce_all_preserves_clifford_semantics(seed):
    c = random_circuit(4, 30, "clifford", seed=seed)
    g = reduce_all(circuit_to_diagram(c))
    assert equivalent_clifford(c, extract(g))


@pytest.mark.parametrize("seed", range(8))
def test_reduce_all_preserves_dense_semantics(seed):
    c = random_circuit(2, 12, "cliffordt", seed=seed)
    d = circuit_to_diagram(c)
    before = diagram_matrix(d)
    assert same_up_to_scale(before, diagram_matrix(reduce_all(d)))


@pytest.mark.parametrize("seed", range(10))
def test_reduce_all_with_gadgets(seed):
    c = random_circuit(3, 20, "cliffordt", seed=seed)
    g = reduce_all(circuit_to_diagram(c), gadgets=True)
    assert equivalent(c, extract(g))


def test_reduce_all_does_not_mutate_input():
    d = circuit_to_diagram(random_circuit(4, 20, "clifford", seed=0))
    snapshot = d.copy()
    reduce_all(d)
    assert d == snapshot


def test_reduce_all_identity():
    g = reduce_all(new_diagram(4))
    assert num_interior_spiders(g) == 0


@pytest.mark.parametrize("seed", range(5))
def test_reduce_all_order_insensitive_results(seed):
    # candidate shuffling changes the path, never the terminal semantics
    c = random_circuit(4, 25, "clifford", seed=seed)
    d = circuit_to_diagram(c)
    a = extract(reduce_all(d))
    b = extract(reduce_all(d, shuffle_seed=seed + 1))
    assert equivalent_clifford(a, b)


@pytest.mark.parametrize("seed", range(10))
def test_reduce_all_compresses_deep_circuits(seed):
    c = random_circuit(6, 200, "clifford", seed=seed)
    g = reduce_all(circuit_to_diagram(c))
    assert len(extract(g).gates) < 200
