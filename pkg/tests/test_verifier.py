import numpy as np
import pytest

from zxopt.circuit_ir import (
    Circuit,
    cnot,
    cz,
    h,
    random_circuit,
    rz,
    s,
    sdg,
    t,
    tdg,
    z,
)
from zxopt.verifier import (
    Tableau,
    UnsupportedGateError,
    UnsupportedSizeError,
    equivalent,
    equivalent_clifford,
    equivalent_dense,
    tableau_of,
    unitary_of,
)


# -- dense unitaries ---------------------------------------------------------


def test_unitary_known_gates():
    assert np.allclose(unitary_of(Circuit(1, [h(0)])),
                       np.array([[1, 1], [1, -1]]) / np.sqrt(2))
    assert np.allclose(unitary_of(Circuit(1, [z(0)])), np.diag([1, -1]))
    assert np.allclose(unitary_of(Circuit(1, [s(0)])), np.diag([1, 1j]))
    assert np.allclose(unitary_of(Circuit(1, [t(0)])),
                       np.diag([1, np.exp(1j * np.pi / 4)]))
    expect_cnot = np.eye(4)[[0, 1, 3, 2]]
    assert np.allclose(unitary_of(Circuit(2, [cnot(0, 1)])), expect_cnot)
    assert np.allclose(unitary_of(Circuit(2, [cz(0, 1)])),
                       np.diag([1, 1, 1, -1]))


def test_unitary_is_unitary():
    for seed in range(5):
        c = random_circuit(3, 20, "cliffordt", seed=seed)
        u = unitary_of(c)
        assert np.allclose(u @ u.conj().T, np.eye(8), atol=1e-10)


def test_unitary_size_limit():
    with pytest.raises(UnsupportedSizeError):
        unitary_of(Circuit(13))


# -- algebraic identities through both oracles -------------------------------


@pytest.mark.parametrize("a,b", [
    (Circuit(1, [h(0), h(0)]), Circuit(1)),
    (Circuit(1, [s(0), s(0)]), Circuit(1, [z(0)])),
    (Circuit(1, [s(0), sdg(0)]), Circuit(1)),
    (Circuit(2, [cnot(0, 1), cnot(0, 1)]), Circuit(2)),
    (Circuit(2, [h(1), cz(0, 1), h(1)]), Circuit(2, [cnot(0, 1)])),
    (Circuit(2, [cz(0, 1)]), Circuit(2, [cz(1, 0)])),
])
def test_clifford_identities(a, b):
    assert equivalent_clifford(a, b)
    assert equivalent_dense(a, b)


def test_t_gate_identities():
    assert equivalent_dense(Circuit(1, [t(0), t(0)]), Circuit(1, [s(0)]))
    assert equivalent_dense(Circuit(1, [t(0), tdg(0)]), Circuit(1))
    assert not equivalent_dense(Circuit(1, [t(0)]), Circuit(1))


def test_global_phase_ignored():
    # Z then X differs from X then Z by a global minus sign
    xz = Circuit(1, [z(0), h(0), z(0), h(0)])
    zx = Circuit(1, [h(0), z(0), h(0), z(0)])
    assert equivalent_dense(xz, zx)
    assert equivalent_clifford(xz, zx)


def test_inequivalence_detected():
    assert not equivalent_clifford(Circuit(1, [h(0)]), Circuit(1))
    assert not equivalent_clifford(Circuit(2, [cnot(0, 1)]),
                                   Circuit(2, [cnot(1, 0)]))
    assert not equivalent_dense(Circuit(1, [s(0)]), Circuit(1, [sdg(0)]))


def test_width_mismatch_rejected():
    with pytest.raises(ValueError):
        equivalent_clifford(Circuit(1), Circuit(2))


# -- tableau mechanics -------------------------------------------------------


def test_tableau_rejects_t():
    with pytest.raises(UnsupportedGateError):
        tableau_of(Circuit(1, [t(0)]))


def test_tableau_identity_is_identity():
    assert tableau_of(Circuit(3)).is_identity()
    assert not tableau_of(Circuit(3, [h(0)])).is_identity()
    assert tableau_of(Circuit(3)) == Tableau(3)


@pytest.mark.parametrize("seed", range(30))
def test_tableau_agrees_with_dense(seed):
    a = random_circuit(3, 25, "clifford", seed=seed)
    b = random_circuit(3, 25, "clifford", seed=seed + 1000)
    assert equivalent_clifford(a, b) == equivalent_dense(a, b)
    assert equivalent_clifford(a, a)


# -- dispatcher --------------------------------------------------------------


def test_equivalent_dispatches_by_content():
    cliff = random_circuit(3, 20, "clifford", seed=1)
    assert equivalent(cliff, cliff)
    ct = random_circuit(3, 20, "cliffordt", seed=1)
    assert equivalent(ct, ct)
