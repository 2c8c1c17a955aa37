"""Semantic equivalence oracles.

Two independent checks: a stabilizer tableau (Clifford circuits, any width up
to 64) and dense unitary comparison up to global phase (any circuit, width
<= 6).  Both ignore global phase; the rewrite rules only hold up to a scalar.
"""

from __future__ import annotations

import numpy as np

from .circuit_ir import Circuit, Gate

DENSE_MAX_QUBITS = 6


class UnsupportedGateError(Exception):
    pass


class UnsupportedSizeError(Exception):
    pass


class Tableau:
    """Aaronson-Gottesman tableau tracking conjugation of the Pauli generators.

    Rows 0..n-1 hold the images of X_i, rows n..2n-1 the images of Z_i.
    """

    def __init__(self, n: int):
        self.n = n
        self.x = np.zeros((2 * n, n), dtype=np.uint8)
        self.z = np.zeros((2 * n, n), dtype=np.uint8)
        self.r = np.zeros(2 * n, dtype=np.uint8)
        self.x[:n] = np.eye(n, dtype=np.uint8)
        self.z[n:] = np.eye(n, dtype=np.uint8)

    def _h(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.x[:, q], self.z[:, q] = self.z[:, q].copy(), self.x[:, q].copy()

    def _s(self, q: int) -> None:
        self.r ^= self.x[:, q] & self.z[:, q]
        self.z[:, q] ^= self.x[:, q]

    def _cnot(self, c: int, t: int) -> None:
        self.r ^= self.x[:, c] & self.z[:, t] & (self.x[:, t] ^ self.z[:, c] ^ 1)
        self.x[:, t] ^= self.x[:, c]
        self.z[:, c] ^= self.z[:, t]

    def apply_gate(self, g: Gate) -> None:
        if g.name == "h":
            self._h(g.qubits[0])
        elif g.name == "rz":
            if g.phase_k % 2 != 0:
                raise UnsupportedGateError(f"non-Clifford gate {g}")
            for _ in range((g.phase_k // 2) % 4):
                self._s(g.qubits[0])
        elif g.name == "cnot":
            self._cnot(*g.qubits)
        elif g.name == "cz":
            a, b = g.qubits
            self._h(b)
            self._cnot(a, b)
            self._h(b)
        else:
            raise UnsupportedGateError(f"unknown gate {g}")

    def is_identity(self) -> bool:
        n = self.n
        return (
            bool(np.array_equal(self.x[:n], np.eye(n, dtype=np.uint8)))
            and not self.z[:n].any()
            and not self.x[n:].any()
            and bool(np.array_equal(self.z[n:], np.eye(n, dtype=np.uint8)))
            and not self.r.any()
        )

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, Tableau):
            return NotImplemented
        return (
            self.n == other.n
            and np.array_equal(self.x, other.x)
            and np.array_equal(self.z, other.z)
            and np.array_equal(self.r, other.r)
        )


def tableau_of(c: Circuit) -> Tableau:
    t = Tableau(c.n_qubits)
    for g in c.gates:
        t.apply_gate(g)
    return t


def equivalent_clifford(a: Circuit, b: Circuit) -> bool:
    """Equality up to global phase: identical conjugation action on all Pauli
    generators, signs included."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("width mismatch")
    return tableau_of(a) == tableau_of(b)


# -- dense oracle ----------------------------------------------------------

_H = np.array([[1, 1], [1, -1]], dtype=np.complex128) / np.sqrt(2)


def _one_qubit_full(n: int, q: int, g: np.ndarray) -> np.ndarray:
    # qubit 0 is the most significant bit
    m = np.eye(1, dtype=np.complex128)
    for i in range(n):
        m = np.kron(m, g if i == q else np.eye(2))
    return m


def unitary_of(c: Circuit) -> np.ndarray:
    if c.n_qubits > DENSE_MAX_QUBITS:
        raise UnsupportedSizeError(f"dense oracle capped at {DENSE_MAX_QUBITS} qubits")
    n = c.n_qubits
    dim = 2**n
    u = np.eye(dim, dtype=np.complex128)
    idx = np.arange(dim)
    for g in c.gates:
        if g.name == "h":
            m = _one_qubit_full(n, g.qubits[0], _H)
            u = m @ u
        elif g.name == "rz":
            bit = (idx >> (n - 1 - g.qubits[0])) & 1
            ph = np.where(bit == 1, np.exp(1j * np.pi * g.phase_k / 4), 1.0)
            u = ph[:, None] * u
        elif g.name == "cz":
            a = (idx >> (n - 1 - g.qubits[0])) & 1
            b = (idx >> (n - 1 - g.qubits[1])) & 1
            ph = np.where((a & b) == 1, -1.0, 1.0)
            u = ph[:, None] * u
        elif g.name == "cnot":
            cbit = (idx >> (n - 1 - g.qubits[0])) & 1
            target_mask = 1 << (n - 1 - g.qubits[1])
            perm = np.where(cbit == 1, idx ^ target_mask, idx)
            u = u[perm, :]
        else:
            raise UnsupportedGateError(f"unknown gate {g}")
    return u


def equivalent_dense(a: Circuit, b: Circuit, tol: float = 1e-9) -> bool:
    """True iff U_a = exp(i*phi) U_b entrywise within ``tol``."""
    if a.n_qubits != b.n_qubits:
        raise ValueError("width mismatch")
    ua = unitary_of(a)
    ub = unitary_of(b)
    flat = np.argmax(np.abs(ua))
    i, j = np.unravel_index(flat, ua.shape)
    if abs(ua[i, j]) < tol:
        return bool(np.allclose(ua, ub, atol=tol))
    phase = ub[i, j] / ua[i, j]
    if abs(abs(phase) - 1.0) > 1e-6:
        return False
    return bool(np.allclose(ua * phase, ub, atol=tol))


def equivalent(a: Circuit, b: Circuit) -> bool:
    """Dispatch: tableau for Clifford pairs, dense otherwise (width <= 6)."""
    if a.is_clifford() and b.is_clifford():
        return equivalent_clifford(a, b)
    return equivalent_dense(a, b)
