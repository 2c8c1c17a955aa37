"""Graph attention networks for the policy and value functions.

A ``Graph`` is a flat batch: node features, a directed edge list with 3-d
edge features, and a graph id per node so several graphs can be processed as
one disjoint union.  The attention layer computes, per directed edge j->i,

    logit_ij = a . leaky_relu(Theta_s x_i + Theta_t x_j + Theta_e e_ij)

normalized by softmax over each target node's incoming edges (self-loops are
part of the edge list), and aggregates ``Theta_s x`` on self-loops and
``Theta_t x`` on proper edges.  Edge features enter only the logits.
"""

from __future__ import annotations

import json
import struct

import numpy as np
from numba import njit

from .autodiff import Tensor, parameter, segment_softmax

HIDDEN_DIM = 64
NUM_LAYERS = 3
EDGE_DIM = 3
ACTOR_NODE_DIM = 7
CRITIC_NODE_DIM = 3
LEAKY_SLOPE = 0.2

# dtype for the per-edge arrays inside the attention layer.  Parameters and
# the surrounding autodiff stay float64; float32 here halves the memory
# traffic that dominates training time.  Gradient checks set this to float64.
COMPUTE_DTYPE = np.float32


def set_compute_dtype(dtype) -> None:
    global COMPUTE_DTYPE
    COMPUTE_DTYPE = np.dtype(dtype).type

CHECKPOINT_MAGIC = b"ZXNN1\n"


class CheckpointError(Exception):
    pass


class Graph:
    """Batched graph input: ``src``/``dst`` are directed edge endpoints (both
    directions present for undirected wires, plus one self-loop per node)."""

    def __init__(self, node_feats, edge_src, edge_dst, edge_feats,
                 node_graph_ids=None, num_graphs: int = 1):
        self.x = np.asarray(node_feats, dtype=np.float64)
        self.src = np.asarray(edge_src, dtype=np.intp)
        self.dst = np.asarray(edge_dst, dtype=np.intp)
        self.e = np.asarray(edge_feats, dtype=np.float64)
        if self.e.ndim == 1:
            self.e = self.e.reshape(0, EDGE_DIM)
        n = self.x.shape[0]
        if node_graph_ids is None:
            node_graph_ids = np.zeros(n, dtype=np.intp)
        self.graph_ids = np.asarray(node_graph_ids, dtype=np.intp)
        self.num_graphs = num_graphs
        # edges sorted by target node make every per-node reduction (softmax,
        # aggregation) a contiguous-segment loop; the self-loop per node
        # guarantees no segment is empty
        order = np.argsort(self.dst, kind="stable")
        self.src, self.dst, self.e = self.src[order], self.dst[order], self.e[order]
        self.seg_starts = np.append(
            np.searchsorted(self.dst, np.arange(n)), len(self.dst))
        if n and (len(self.dst) < n
                  or not np.array_equal(self.dst[self.seg_starts[:-1]],
                                        np.arange(n))):
            raise ValueError("every node needs a self-loop edge")
        self._e_cache: np.ndarray | None = None

    def edge_feats_as(self, dtype) -> np.ndarray:
        if self._e_cache is None or self._e_cache.dtype != dtype:
            self._e_cache = self.e.astype(dtype)
        return self._e_cache

    @property
    def num_nodes(self) -> int:
        return self.x.shape[0]


def union_graphs(graphs: list["Graph"]) -> "Graph":
    """Disjoint union with shifted node ids; graph ids relabeled 0..k-1."""
    xs, srcs, dsts, es, gids = [], [], [], [], []
    offset = 0
    for i, g in enumerate(graphs):
        xs.append(g.x)
        srcs.append(g.src + offset)
        dsts.append(g.dst + offset)
        es.append(g.e)
        gids.append(np.full(g.num_nodes, i, dtype=np.intp))
        offset += g.num_nodes
    return Graph(
        np.concatenate(xs), np.concatenate(srcs), np.concatenate(dsts),
        np.concatenate(es), np.concatenate(gids), num_graphs=len(graphs),
    )


@njit(cache=True, fastmath=True)
def _attention_forward(hs, ht, he, A, src, seg_starts, slope):
    """Edge logits, per-target softmax and weighted aggregation, fused.

    Edges arrive sorted by target node; ``seg_starts[n]:seg_starts[n+1]`` is
    node n's in-edge range.  ``he`` is the per-edge feature projection,
    precomputed outside as one matmul.  Self-loop messages carry the source
    projection ``hs``, proper edges the target projection ``ht``.
    Returns (attention weights, aggregated node features).
    """
    N, D = hs.shape
    E = src.shape[0]
    alpha = np.empty(E, dtype=hs.dtype)
    out = np.zeros((N, D), dtype=hs.dtype)
    zero = slope - slope  # scalar zero in the compute dtype
    for n in range(N):
        lo, hi = seg_starts[n], seg_starts[n + 1]
        for e in range(lo, hi):
            s = src[e]
            acc = zero
            for k in range(D):
                v = hs[n, k] + ht[s, k] + he[e, k]
                acc += A[k] * (v if v > zero else slope * v)
            alpha[e] = acc
        mx = alpha[lo]
        for e in range(lo + 1, hi):
            mx = max(mx, alpha[e])
        tot = zero
        for e in range(lo, hi):
            w = np.exp(alpha[e] - mx)
            alpha[e] = w
            tot += w
        for e in range(lo, hi):
            w = alpha[e] / tot
            alpha[e] = w
            s = src[e]
            if s == n:
                for k in range(D):
                    out[n, k] += w * hs[n, k]
            else:
                for k in range(D):
                    out[n, k] += w * ht[s, k]
    return alpha, out


@njit(cache=True, fastmath=True)
def _attention_backward(hs, ht, he, A, src, seg_starts, alpha, G, slope):
    """Gradients of ``_attention_forward`` given upstream grad ``G``.

    Recomputes the pre-activations on the fly instead of storing per-edge
    intermediates.  Returns (d_hs, d_ht, dpre, dA); the edge-projection
    gradient is ``dpre`` itself, left to the caller as a matmul.
    """
    N, D = hs.shape
    E = src.shape[0]
    d_hs = np.zeros((N, D), dtype=hs.dtype)
    d_ht = np.zeros((N, D), dtype=hs.dtype)
    dpre = np.empty((E, D), dtype=hs.dtype)
    dA = np.zeros(D, dtype=hs.dtype)
    dlogit = np.empty(E, dtype=hs.dtype)
    zero = slope - slope  # scalar zero in the compute dtype
    for n in range(N):
        lo, hi = seg_starts[n], seg_starts[n + 1]
        # softmax backward: d logit = alpha * (m.G - sum_seg alpha * m.G)
        seg = zero
        for e in range(lo, hi):
            s = src[e]
            acc = zero
            if s == n:
                for k in range(D):
                    acc += hs[n, k] * G[n, k]
            else:
                for k in range(D):
                    acc += ht[s, k] * G[n, k]
            acc *= alpha[e]
            dlogit[e] = acc
            seg += acc
        for e in range(lo, hi):
            dl = dlogit[e] - alpha[e] * seg
            s = src[e]
            al = alpha[e]
            for k in range(D):
                pre = hs[n, k] + ht[s, k] + he[e, k]
                dA[k] += dl * (pre if pre > zero else slope * pre)
                dp = dl * A[k]
                if pre <= zero:
                    dp *= slope
                dpre[e, k] = dp
                d_hs[n, k] += dp
                gm = al * G[n, k]
                if s == n:
                    d_ht[n, k] += dp
                    d_hs[n, k] += gm
                else:
                    d_ht[s, k] += dp + gm
    return d_hs, d_ht, dpre, dA


class Gatv2Layer:
    def __init__(self, d_in: int, d_out: int, d_edge: int,
                 rng: np.random.Generator):
        def glorot(shape):
            s = np.sqrt(6.0 / (shape[0] + shape[1]))
            return parameter(shape, rng, scale=s)

        self.theta_s = glorot((d_in, d_out))
        self.theta_t = glorot((d_in, d_out))
        self.theta_e = glorot((d_edge, d_out))
        self.att = glorot((d_out, 1))

    def params(self) -> list[tuple[str, Tensor]]:
        return [("theta_s", self.theta_s), ("theta_t", self.theta_t),
                ("theta_e", self.theta_e), ("att", self.att)]

    def forward(self, x: Tensor, g: Graph,
                alpha_out: list | None = None) -> Tensor:
        """One attention layer as a single fused autodiff node.

        The whole layer (projections, edge logits, per-target softmax,
        weighted aggregation) runs as hand-written numpy with a hand-derived
        backward; the generic op-by-op route allocates dozens of per-edge
        intermediates and dominates training time.
        """
        dt = COMPUTE_DTYPE
        X = np.ascontiguousarray(x.data, dtype=dt)
        Ts = self.theta_s.data.astype(dt, copy=False)
        Tt = self.theta_t.data.astype(dt, copy=False)
        Te = np.ascontiguousarray(self.theta_e.data, dtype=dt)
        A = np.ascontiguousarray(self.att.data.ravel(), dtype=dt)
        ef = g.edge_feats_as(dt)

        slope = dt(LEAKY_SLOPE)
        hs = X @ Ts
        ht = X @ Tt
        he = ef @ Te
        alpha, out = _attention_forward(hs, ht, he, A, g.src,
                                        g.seg_starts, slope)
        if alpha_out is not None:
            alpha_out.append(alpha.astype(np.float64))

        theta_s, theta_t, theta_e, att = (self.theta_s, self.theta_t,
                                          self.theta_e, self.att)

        def back(G):
            Gc = np.ascontiguousarray(G, dtype=dt)
            d_hs, d_ht, dpre, dA = _attention_backward(
                hs, ht, he, A, g.src, g.seg_starts, alpha, Gc, slope)
            att._accum(dA[:, None])
            theta_e._accum(ef.T @ dpre)
            theta_s._accum(X.T @ d_hs)
            theta_t._accum(X.T @ d_ht)
            if x.requires_grad:
                x._accum(d_hs @ Ts.T + d_ht @ Tt.T)

        return Tensor._make(
            out, (x, theta_s, theta_t, theta_e, att), back)


class _Stack:
    """Shared three-layer message-passing trunk."""

    def __init__(self, d_in: int, rng: np.random.Generator):
        dims = [d_in] + [HIDDEN_DIM] * NUM_LAYERS
        self.layers = [
            Gatv2Layer(dims[i], dims[i + 1], EDGE_DIM, rng)
            for i in range(NUM_LAYERS)
        ]

    def forward(self, g: Graph, alpha_out: list | None = None) -> Tensor:
        x = Tensor(g.x)
        for i, layer in enumerate(self.layers):
            if i > 0:
                x = x.leaky_relu(LEAKY_SLOPE)
            x = layer.forward(x, g, alpha_out)
        return x

    def params(self) -> list[tuple[str, Tensor]]:
        out = []
        for i, layer in enumerate(self.layers):
            for name, p in layer.params():
                out.append((f"layer{i}.{name}", p))
        return out


class ActorNet:
    """Policy network: per-action-node logit, softmax over the feasible-action
    nodes of each graph."""

    def __init__(self, rng: np.random.Generator):
        self.stack = _Stack(ACTOR_NODE_DIM, rng)
        # no bias on the logit head: a shared offset cancels in the softmax
        self.head_w = parameter((HIDDEN_DIM, 1), rng)

    def params(self) -> list[tuple[str, Tensor]]:
        return self.stack.params() + [("head_w", self.head_w)]

    def action_probs(self, g: Graph, action_nodes: np.ndarray,
                     alpha_out: list | None = None) -> Tensor:
        """Probabilities for the listed action nodes; softmax runs per graph.

        ``action_nodes`` are node indices into ``g``; the result rows align
        with them and each graph's slice sums to 1.
        """
        action_nodes = np.asarray(action_nodes, dtype=np.intp)
        feats = self.stack.forward(g, alpha_out)
        logits = feats.gather_rows(action_nodes) @ self.head_w
        seg = g.graph_ids[action_nodes]
        return segment_softmax(logits, seg, g.num_graphs).reshape(-1)


class CriticNet:
    """Value network: message passing, global attention pool, scalar head."""

    def __init__(self, rng: np.random.Generator):
        self.stack = _Stack(CRITIC_NODE_DIM, rng)
        self.gate_w = parameter((HIDDEN_DIM, 1), rng)
        self.head_w = parameter((HIDDEN_DIM, 1), rng)
        self.head_b = Tensor(np.zeros(1), requires_grad=True)

    def params(self) -> list[tuple[str, Tensor]]:
        return self.stack.params() + [("gate_w", self.gate_w),
                                      ("head_w", self.head_w),
                                      ("head_b", self.head_b)]

    def values(self, g: Graph, alpha_out: list | None = None) -> Tensor:
        """One value estimate per graph in the batch, shape (num_graphs,)."""
        feats = self.stack.forward(g, alpha_out)
        scores = feats @ self.gate_w
        weights = segment_softmax(scores, g.graph_ids, g.num_graphs)
        pooled = (feats * weights).segment_sum(g.graph_ids, g.num_graphs)
        return (pooled @ self.head_w + self.head_b).reshape(-1)


# -- checkpointing ----------------------------------------------------------


def _named_params(nets: dict[str, object]) -> list[tuple[str, Tensor]]:
    out = []
    for prefix, net in sorted(nets.items()):
        for name, p in net.params():
            out.append((f"{prefix}.{name}", p))
    return out


def checkpoint_save(nets: dict[str, object], path: str,
                    meta: dict | None = None) -> None:
    """Write a manifest (names, shapes, metadata) followed by the parameter
    arrays as little-endian float32 in manifest order."""
    named = _named_params(nets)
    manifest = {
        "arrays": [{"name": n, "shape": list(p.data.shape)} for n, p in named],
        "meta": meta or {},
    }
    blob = json.dumps(manifest, sort_keys=True).encode()
    with open(path, "wb") as f:
        f.write(CHECKPOINT_MAGIC)
        f.write(struct.pack("<I", len(blob)))
        f.write(blob)
        for _, p in named:
            f.write(p.data.astype("<f4").tobytes())


def checkpoint_load(nets: dict[str, object], path: str) -> dict:
    """Load parameters saved by ``checkpoint_save`` into ``nets`` (which must
    have matching names and shapes); returns the stored metadata."""
    with open(path, "rb") as f:
        data = f.read()
    if not data.startswith(CHECKPOINT_MAGIC):
        raise CheckpointError(f"{path}: bad magic")
    off = len(CHECKPOINT_MAGIC)
    if len(data) < off + 4:
        raise CheckpointError(f"{path}: truncated header")
    (mlen,) = struct.unpack_from("<I", data, off)
    off += 4
    try:
        manifest = json.loads(data[off:off + mlen])
    except ValueError as exc:
        raise CheckpointError(f"{path}: bad manifest: {exc}") from exc
    off += mlen
    named = dict(_named_params(nets))
    entries = manifest.get("arrays", [])
    if sorted(e["name"] for e in entries) != sorted(named):
        raise CheckpointError(f"{path}: parameter names do not match networks")
    for entry in entries:
        name, shape = entry["name"], tuple(entry["shape"])
        p = named[name]
        if p.data.shape != shape:
            raise CheckpointError(
                f"{path}: shape mismatch for {name}: "
                f"file {shape} vs network {p.data.shape}")
        count = int(np.prod(shape)) if shape else 1
        nbytes = 4 * count
        if off + nbytes > len(data):
            raise CheckpointError(f"{path}: truncated array data")
        arr = np.frombuffer(data[off:off + nbytes], dtype="<f4").reshape(shape)
        p.data = arr.astype(np.float64)
        off += nbytes
    return manifest.get("meta", {})
