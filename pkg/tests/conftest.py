"""Shared test oracles.

``diagram_matrix`` evaluates a diagram's linear map by brute-force summation
over all spider assignments — exponential, usable only for small diagrams, but
completely independent of the extraction/verification code under test.
"""

import itertools

import numpy as np

from zxopt.zx_graph import EdgeType, ZxDiagram, to_graph_like


def diagram_matrix(d: ZxDiagram) -> np.ndarray:
    """Dense linear map (inputs -> outputs) of a diagram, up to global scale."""
    g = to_graph_like(d)
    spiders = g.spiders()
    n_in, n_out = len(g.inputs), len(g.outputs)
    m = np.zeros((2**n_out, 2**n_in), dtype=np.complex128)
    idx = {v: i for i, v in enumerate(spiders)}
    edges = list(g.edges())
    for in_bits in itertools.product((0, 1), repeat=n_in):
        for out_bits in itertools.product((0, 1), repeat=n_out):
            bval = {}
            for b, x in zip(g.inputs, in_bits):
                bval[b] = x
            for b, x in zip(g.outputs, out_bits):
                bval[b] = x
            total = 0.0 + 0.0j
            for assign in itertools.product((0, 1), repeat=len(spiders)):
                val = {v: assign[i] for v, i in idx.items()}
                val.update(bval)
                w = 1.0 + 0.0j
                for v in spiders:
                    w *= np.exp(1j * np.pi * g.phase(v) * val[v] / 4)
                ok = True
                for u, v, t in edges:
                    if t is EdgeType.SIMPLE:
                        if val[u] != val[v]:
                            ok = False
                            break
                    elif val[u] and val[v]:
                        w = -w
                if ok:
                    total += w
            row = 0
            for x in out_bits:
                row = row * 2 + x
            col = 0
            for x in in_bits:
                col = col * 2 + x
            m[row, col] = total
    return m


def same_up_to_scale(a: np.ndarray, b: np.ndarray, tol: float = 1e-8) -> bool:
    """True when ``b`` equals ``a`` times one nonzero complex scalar."""
    i = np.argmax(np.abs(a))
    if abs(a.flat[i]) < tol:
        return np.allclose(b, 0, atol=tol)
    s = b.flat[i] / a.flat[i]
    if abs(s) < tol:
        return False
    return np.allclose(a * s, b, atol=tol * max(1.0, float(np.abs(b).max())))
