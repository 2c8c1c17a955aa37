import numpy as np
import pytest

from zxopt.circuit_ir import circuit_to_diagram, random_circuit
from zxopt.extraction import extract
from zxopt.gnn import ACTOR_NODE_DIM, CRITIC_NODE_DIM
from zxopt.rewrite_rules import ActionTag, enumerate_actions
from zxopt.rl_env import (
    EDGE_ACTION_ACTION,
    EDGE_ACTION_SPIDER,
    EDGE_WIRE,
    EnvConfig,
    VecEnv,
    ZxEnv,
    build_policy_graph,
)
from zxopt.zx_graph import to_graph_like


def small_cfg(**kw):
    base = dict(n_qubits=4, n_gates=15, seed=0)
    base.update(kw)
    return EnvConfig(**base)


# -- featurization -----------------------------------------------------------


def obs_of(seed):
    c = random_circuit(4, 15, "clifford", seed=seed)
    d = to_graph_like(circuit_to_diagram(c))
    return d, build_policy_graph(d, enumerate_actions(d))


def test_policy_graph_shapes():
    d, pg = obs_of(0)
    n_spiders = len(d.spiders())
    n_actions = len(pg.actions)
    assert pg.actor_graph.num_nodes == n_spiders + n_actions
    assert pg.actor_graph.x.shape[1] == ACTOR_NODE_DIM
    assert pg.critic_graph.num_nodes == n_spiders
    assert pg.critic_graph.x.shape[1] == CRITIC_NODE_DIM
    assert list(pg.action_nodes) == list(range(n_spiders,
                                               n_spiders + n_actions))


def test_policy_graph_phase_features():
    d, pg = obs_of(1)
    for i, v in enumerate(d.spiders()):
        phi = d.phase(v) * np.pi / 4
        assert pg.actor_graph.x[i, 0] == pytest.approx(np.sin(phi))
        assert pg.actor_graph.x[i, 1] == pytest.approx(np.cos(phi))
        assert pg.actor_graph.x[i, 2] == float(bool(d.boundary_neighbors(v)))


def test_policy_graph_edge_states_one_hot():
    _, pg = obs_of(2)
    e = pg.actor_graph.e
    sums = e.sum(axis=1)
    assert set(np.unique(sums)) <= {0.0, 1.0}  # self-loops are all-zero


def test_stop_node_connects_to_everything():
    d, pg = obs_of(3)
    n_spiders = len(d.spiders())
    stop_rows = [i for i, a in enumerate(pg.actions)
                 if a.tag is ActionTag.STOP]
    assert len(stop_rows) == 1
    stop = n_spiders + stop_rows[0]
    g = pg.actor_graph
    partners = {int(g.src[k]) for k in range(len(g.src))
                if g.dst[k] == stop and g.src[k] != stop}
    assert partners == set(range(g.num_nodes)) - {stop}


def test_action_nodes_fully_interconnected():
    d, pg = obs_of(4)
    n_spiders = len(d.spiders())
    g = pg.actor_graph
    non_stop = [n_spiders + i for i, a in enumerate(pg.actions)
                if a.tag is not ActionTag.STOP]
    aa = {(int(s), int(t)) for s, t in zip(g.src, g.dst)
          if s in non_stop and t in non_stop and s != t}
    for a in non_stop:
        for b in non_stop:
            if a != b:
                assert (a, b) in aa


# -- environment -------------------------------------------------------------


def test_reset_deterministic():
    env = ZxEnv(small_cfg())
    a = env.reset(episode_seed=11)
    b = ZxEnv(small_cfg()).reset(episode_seed=11)
    assert a.info == b.info
    assert [r.vertices for r in a.observation.actions] == \
        [r.vertices for r in b.observation.actions]


def test_step_reward_matches_extraction_drop():
    cfg = small_cfg(normalizer_table={(4, 15): 2.0})
    env = ZxEnv(cfg)
    res = env.reset(episode_seed=5)
    before = res.info["gates_now"]
    res = env.step(0)
    after = res.info["gates_now"]
    assert res.reward == pytest.approx((before - after) / 2.0)


def test_normalizer_fallback():
    assert small_cfg().normalizer() == pytest.approx(0.2 * 15)
    assert small_cfg(normalizer_table={(4, 15): 7.5}).normalizer() == 7.5


def test_stop_action_ends_episode():
    env = ZxEnv(small_cfg())
    res = env.reset(episode_seed=1)
    stop = next(i for i, a in enumerate(res.observation.actions)
                if a.tag is ActionTag.STOP)
    res = env.step(stop)
    assert res.done
    assert res.reward == 0.0
    with pytest.raises(RuntimeError):
        env.step(0)


def test_step_index_validated():
    env = ZxEnv(small_cfg())
    res = env.reset(episode_seed=1)
    with pytest.raises(IndexError):
        env.step(len(res.observation.actions))


@pytest.mark.parametrize("seed", range(10))
def test_reward_telescoping(seed):
    import random as pyrandom

    env = ZxEnv(small_cfg(normalizer_table={(4, 15): 1.0}))
    rng = pyrandom.Random(seed)
    res = env.reset(episode_seed=100 + seed)
    initial = res.info["gates_now"]
    total = 0.0
    while not res.done:
        res = env.step(rng.randrange(len(res.observation.actions)))
        total += res.reward
    assert total == initial - res.info["gates_now"]


def test_max_steps_cuts_episode():
    import random as pyrandom

    env = ZxEnv(small_cfg(max_steps=3, n_gates=25))
    rng = pyrandom.Random(0)
    res = env.reset(episode_seed=4)
    steps = 0
    while not res.done:
        res = env.step(rng.randrange(len(res.observation.actions)))
        steps += 1
    assert steps <= 3


def test_final_state_equivalent_to_source():
    import random as pyrandom

    from zxopt.verifier import equivalent_clifford

    env = ZxEnv(small_cfg())
    rng = pyrandom.Random(3)
    res = env.reset(episode_seed=77)
    c = random_circuit(4, 15, "clifford", seed=77)
    while not res.done:
        res = env.step(rng.randrange(len(res.observation.actions)))
    assert equivalent_clifford(c, extract(env._diagram))


# -- vectorized wrapper ------------------------------------------------------


def test_vecenv_auto_reset():
    import random as pyrandom

    vec = VecEnv(small_cfg(), 3)
    rng = pyrandom.Random(0)
    results = vec.reset()
    assert len(results) == 3
    dones = 0
    for _ in range(200):
        acts = [rng.randrange(len(r.observation.actions)) for r in results]
        results = vec.step(acts)
        for r in results:
            if r.done:
                dones += 1
                # observation already belongs to the fresh episode
                assert len(r.observation.actions) > 1
    assert dones > 0


def test_vecenv_per_instance_seeding():
    vec = VecEnv(small_cfg(seed=5), 2)
    seeds = [env.cfg.seed for env in vec.envs]
    assert seeds == [5, 6]
