import numpy as np
import pytest

import zxopt.gnn as gnn
from zxopt.autodiff import Tensor, gradcheck
from zxopt.gnn import (
    ActorNet,
    CheckpointError,
    CriticNet,
    Graph,
    checkpoint_load,
    checkpoint_save,
    set_compute_dtype,
    union_graphs,
)

rng = np.random.default_rng(0)


@pytest.fixture(autouse=True)
def float64_compute():
    # finite-difference comparisons need the full-precision attention path
    set_compute_dtype(np.float64)
    yield
    set_compute_dtype(np.float32)


def rand_graph(n, a, node_dim, r=rng):
    """n body nodes + a action nodes with action-action and action-body
    wiring, plus the mandatory self-loops."""
    N = n + a
    edges = set()
    for _ in range(2 * n):
        u, v = r.integers(0, n, 2)
        if u != v:
            edges.add((min(u, v), max(u, v), 0))
    for i in range(n, N):
        for j in r.choice(n, size=min(2, n), replace=False):
            edges.add((j, i, 1))
        for j in range(i + 1, N):
            edges.add((i, j, 2))
    src, dst, ef = [], [], []
    for u, v, t in edges:
        for s, d in ((u, v), (v, u)):
            src.append(s)
            dst.append(d)
            e = [0.0, 0.0, 0.0]
            e[t] = 1.0
            ef.append(e)
    for i in range(N):
        src.append(i)
        dst.append(i)
        ef.append([0.0, 0.0, 0.0])
    x = r.normal(size=(N, node_dim))
    return Graph(x, src, dst, ef), np.arange(n, N)


# -- graph container ---------------------------------------------------------


def test_graph_requires_self_loops():
    with pytest.raises(ValueError):
        Graph(np.zeros((2, 3)), [0], [1], [[1.0, 0.0, 0.0]])


def test_graph_segments_cover_all_nodes():
    g, _ = rand_graph(5, 2, 3)
    assert g.seg_starts[0] == 0
    assert g.seg_starts[-1] == len(g.dst)
    assert np.all(np.diff(g.seg_starts) >= 1)
    assert np.all(g.dst == np.sort(g.dst))


def test_union_graphs_offsets():
    a, _ = rand_graph(3, 1, 3)
    b, _ = rand_graph(4, 2, 3)
    u = union_graphs([a, b])
    assert u.num_nodes == a.num_nodes + b.num_nodes
    assert u.num_graphs == 2
    assert np.all(u.graph_ids[:a.num_nodes] == 0)
    assert np.all(u.graph_ids[a.num_nodes:] == 1)
    # no cross-graph edges
    assert np.all((u.src < a.num_nodes) == (u.dst < a.num_nodes))


# -- gradient correctness ----------------------------------------------------


def test_actor_gradcheck():
    actor = ActorNet(np.random.default_rng(1))
    g, acts = rand_graph(5, 3, gnn.ACTOR_NODE_DIM)
    w = rng.normal(size=len(acts))

    def loss():
        # log-space loss: probability outputs saturate, pushing their raw
        # gradients toward the finite-difference noise floor
        return (actor.action_probs(g, acts).log() * Tensor(w)).sum()

    err = gradcheck(loss, [p for _, p in actor.params()])
    assert err < 1e-4


def test_critic_gradcheck_batched():
    critic = CriticNet(np.random.default_rng(2))
    ga, _ = rand_graph(6, 0, gnn.CRITIC_NODE_DIM)
    gb, _ = rand_graph(4, 0, gnn.CRITIC_NODE_DIM)
    u = union_graphs([ga, gb])

    def loss():
        v = critic.values(u)
        return (v * v).sum()

    err = gradcheck(loss, [p for _, p in critic.params()])
    assert err < 1e-4


def test_value_per_graph():
    critic = CriticNet(np.random.default_rng(3))
    ga, _ = rand_graph(6, 0, gnn.CRITIC_NODE_DIM)
    gb, _ = rand_graph(4, 0, gnn.CRITIC_NODE_DIM)
    u = union_graphs([ga, gb])
    v_batch = critic.values(u).data
    assert v_batch.shape == (2,)
    assert np.allclose(v_batch[0], critic.values(ga).data[0])
    assert np.allclose(v_batch[1], critic.values(gb).data[0])


# -- invariants --------------------------------------------------------------


def test_attention_sums_to_one_per_node():
    actor = ActorNet(np.random.default_rng(4))
    g, acts = rand_graph(7, 3, gnn.ACTOR_NODE_DIM)
    alphas = []
    actor.action_probs(g, acts, alpha_out=alphas)
    assert len(alphas) == gnn.NUM_LAYERS
    for a in alphas:
        sums = np.zeros(g.num_nodes)
        np.add.at(sums, g.dst, a.ravel())
        assert np.abs(sums - 1.0).max() < 1e-12


def test_action_probs_sum_to_one_per_graph():
    actor = ActorNet(np.random.default_rng(5))
    ga, acts_a = rand_graph(5, 3, gnn.ACTOR_NODE_DIM)
    gb, acts_b = rand_graph(6, 2, gnn.ACTOR_NODE_DIM)
    u = union_graphs([ga, gb])
    nodes = np.concatenate([acts_a, acts_b + ga.num_nodes])
    p = actor.action_probs(u, nodes).data
    assert np.all(p > 0)
    assert abs(p[:3].sum() - 1.0) < 1e-12
    assert abs(p[3:].sum() - 1.0) < 1e-12


def test_float32_mode_matches_float64_closely():
    actor = ActorNet(np.random.default_rng(6))
    g, acts = rand_graph(6, 3, gnn.ACTOR_NODE_DIM)
    p64 = actor.action_probs(g, acts).data
    set_compute_dtype(np.float32)
    p32 = actor.action_probs(g, acts).data
    assert np.abs(p64 - p32).max() < 1e-4


# -- checkpointing -----------------------------------------------------------


def nets_pair(seed):
    r = np.random.default_rng(seed)
    return {"actor": ActorNet(r), "critic": CriticNet(r)}


def test_checkpoint_round_trip(tmp_path):
    path = str(tmp_path / "p.ckpt")
    src = nets_pair(7)
    checkpoint_save(src, path, meta={"note": 1})
    dst = nets_pair(8)
    meta = checkpoint_load(dst, path)
    assert meta == {"note": 1}
    for (na, pa), (nb, pb) in zip(src["actor"].params(),
                                  dst["actor"].params()):
        assert na == nb
        # storage is float32, so round-tripped values match at that precision
        assert np.allclose(pa.data, pb.data, atol=1e-6)


def test_checkpoint_bad_magic(tmp_path):
    path = str(tmp_path / "bad.ckpt")
    with open(path, "wb") as f:
        f.write(b"not a checkpoint")
    with pytest.raises(CheckpointError):
        checkpoint_load(nets_pair(9), path)


def test_checkpoint_truncated(tmp_path):
    path = str(tmp_path / "t.ckpt")
    checkpoint_save(nets_pair(10), path)
    with open(path, "rb") as f:
        blob = f.read()
    with open(path, "wb") as f:
        f.write(blob[:len(blob) // 2])
    with pytest.raises(CheckpointError):
        checkpoint_load(nets_pair(11), path)


def test_checkpoint_name_mismatch(tmp_path):
    path = str(tmp_path / "a.ckpt")
    r = np.random.default_rng(12)
    checkpoint_save({"actor": ActorNet(r)}, path)
    with pytest.raises(CheckpointError):
        checkpoint_load(nets_pair(13), path)
