import math
import os

import numpy as np
import pytest

from zxopt.autodiff import Tensor, gradcheck
from zxopt.gnn import ActorNet, CriticNet, set_compute_dtype
from zxopt.ppo import (
    Adam,
    MICRO_BATCH,
    PpoConfig,
    _ActorBatch,
    _critic_values,
    clip_grad_norm,
    clipped_surrogate,
    compute_gae,
    evaluate,
    ppo_losses,
    run_episode,
    train,
)
from zxopt.rl_env import EnvConfig, ZxEnv

rng = np.random.default_rng(0)


# -- configuration -----------------------------------------------------------


def test_config_rejects_nonpositive_fields():
    for field in ("num_steps", "num_envs", "learning_rate", "gamma",
                  "total_steps"):
        with pytest.raises(ValueError):
            PpoConfig(**{field: 0})


def test_config_rejects_indivisible_minibatch():
    with pytest.raises(ValueError):
        PpoConfig(num_steps=10, num_envs=3, minibatch_size=7)


# -- generalized advantage estimation ----------------------------------------


def gae_brute_force(rewards, values, dones, gamma, lam, bootstrap):
    """Direct evaluation of the exponentially weighted sum of n-step
    advantage estimates, O(T^2), used as an oracle."""
    T = len(rewards)
    v_next = np.append(values[1:], bootstrap)
    deltas = [rewards[t] + gamma * v_next[t] * (1 - dones[t]) - values[t]
              for t in range(T)]
    adv = np.zeros(T)
    for t in range(T):
        coef = 1.0
        for k in range(t, T):
            adv[t] += coef * deltas[k]
            if dones[k]:
                break
            coef *= gamma * lam
    return adv


@pytest.mark.parametrize("seed", range(30))
def test_gae_matches_brute_force(seed):
    r = np.random.default_rng(seed)
    T = int(r.integers(1, 33))
    rewards = r.normal(size=T)
    values = r.normal(size=T)
    dones = (r.random(T) < 0.2).astype(float)
    bootstrap = float(r.normal())
    gamma, lam = float(r.uniform(0.8, 1.0)), float(r.uniform(0.8, 1.0))
    adv, targets = compute_gae(rewards, values, dones, gamma, lam,
                               bootstrap=np.array([bootstrap]))
    expect = gae_brute_force(rewards, values, dones, gamma, lam, bootstrap)
    assert np.abs(adv - expect).max() < 1e-10
    assert np.abs(targets - (expect + values)).max() < 1e-10


def test_gae_batched_matches_per_column():
    r = np.random.default_rng(1)
    T, N = 16, 4
    rewards = r.normal(size=(T, N))
    values = r.normal(size=(T, N))
    dones = (r.random((T, N)) < 0.2).astype(float)
    boot = r.normal(size=N)
    adv, _ = compute_gae(rewards, values, dones, 0.99, 0.95, bootstrap=boot)
    for j in range(N):
        aj, _ = compute_gae(rewards[:, j], values[:, j], dones[:, j],
                            0.99, 0.95, bootstrap=np.array([boot[j]]))
        assert np.allclose(adv[:, j], aj)


# -- loss terms --------------------------------------------------------------


def test_clipped_surrogate_hand_values():
    # eps = 0.2; worked out by hand:
    #   ratio 0.5, A=+1: max(-0.5, -0.8)  = -0.5
    #   ratio 1.0, A=+1: max(-1.0, -1.0)  = -1.0
    #   ratio 2.0, A=-1: max(+2.0, +1.2)  = +2.0
    ratio = Tensor(np.array([0.5, 1.0, 2.0]))
    adv = np.array([1.0, 1.0, -1.0])
    out = clipped_surrogate(ratio, adv, 0.2).data
    assert np.allclose(out, [-0.5, -1.0, 2.0])


def test_entropy_of_uniform_policy_is_log_n():
    class Uniform:
        def action_probs(self, graph, nodes):
            return Tensor(np.full(len(nodes), 1.0 / len(nodes)))

    env = ZxEnv(EnvConfig(n_qubits=3, n_gates=10, seed=0))
    obs = env.reset(episode_seed=0).observation
    n = len(obs.actions)
    ab = _ActorBatch([obs])
    _, ent = ab.log_probs_and_entropy(Uniform(), [0])
    assert ent.data[0] == pytest.approx(math.log(n), abs=1e-12)


def test_ppo_losses_clip_fraction_and_total():
    n = 6
    logp = Tensor(rng.normal(size=n), requires_grad=True)
    old = logp.data + np.array([0.0, 0.0, 0.3, -0.3, 0.05, -0.05])
    adv = rng.normal(size=n)
    vals = Tensor(rng.normal(size=n), requires_grad=True)
    cfg = PpoConfig(clip_epsilon=0.1)
    la, lc, le, lt, cf = ppo_losses(
        logp, old, adv, vals, vals.data.copy(), rng.normal(size=n),
        Tensor(np.abs(rng.normal(size=n))), cfg)
    assert cf == pytest.approx(2 / 6)
    assert lt.data == pytest.approx(
        la.data + cfg.vf_coef * lc.data - cfg.entropy_coef * le.data)
    lt.backward()
    assert logp.grad is not None and vals.grad is not None


# -- optimizer ---------------------------------------------------------------


def test_adam_matches_reference_implementation():
    x = Tensor(np.array([1.0, -2.0, 3.0]), requires_grad=True)
    opt = Adam([x], lr=0.1)
    ref = x.data.copy()
    m = np.zeros(3)
    v = np.zeros(3)
    for t in range(1, 6):
        opt.zero_grad()
        (x * x).sum().backward()
        g = 2 * ref
        opt.step()
        m = 0.9 * m + 0.1 * g
        v = 0.999 * v + 0.001 * g * g
        ref = ref - 0.1 * (m / (1 - 0.9**t)) / (
            np.sqrt(v / (1 - 0.999**t)) + 1e-8)
        assert np.allclose(x.data, ref, atol=1e-12)


def test_adam_skips_parameters_without_grads():
    x = Tensor(np.ones(2), requires_grad=True)
    y = Tensor(np.ones(2), requires_grad=True)
    opt = Adam([x, y], lr=0.1)
    (x * 2).sum().backward()
    opt.step()
    assert np.array_equal(y.data, np.ones(2))
    assert not np.array_equal(x.data, np.ones(2))


def test_clip_grad_norm():
    a = Tensor(np.zeros(3), requires_grad=True)
    b = Tensor(np.zeros(4), requires_grad=True)
    a.grad = np.full(3, 3.0)
    b.grad = np.full(4, 4.0)
    norm = clip_grad_norm([a, b], 1.0)
    expected = math.sqrt(3 * 9 + 4 * 16)
    assert norm == pytest.approx(expected)
    after = math.sqrt(float(np.sum(a.grad**2) + np.sum(b.grad**2)))
    assert after == pytest.approx(1.0, rel=1e-9)
    # below the threshold nothing changes
    a.grad = np.array([0.1, 0.0, 0.0])
    b.grad = np.zeros(4)
    assert clip_grad_norm([a, b], 1.0) == pytest.approx(0.1)
    assert np.allclose(a.grad, [0.1, 0.0, 0.0])


# -- full-objective gradients ------------------------------------------------


def collect_batch(n, env_seed=0):
    env = ZxEnv(EnvConfig(n_qubits=3, n_gates=10, seed=env_seed))
    obs, acts = [], []
    r = np.random.default_rng(env_seed)
    res = env.reset(episode_seed=0)
    while len(obs) < n:
        if res.done:
            res = env.reset(episode_seed=len(obs) + 1)
        obs.append(res.observation)
        a = int(r.integers(len(res.observation.actions)))
        acts.append(a)
        res = env.step(a)
    return obs, acts


def test_full_objective_gradcheck():
    set_compute_dtype(np.float64)
    try:
        actor = ActorNet(np.random.default_rng(0))
        critic = CriticNet(np.random.default_rng(1))
        obs, acts = collect_batch(4)
        ab = _ActorBatch(obs)
        r = np.random.default_rng(2)
        old_logp = r.normal(size=4) * 0.1
        old_vals = r.normal(size=4)
        adv = r.normal(size=4)
        tgt = r.normal(size=4)
        cfg = PpoConfig()

        def loss():
            logp, ent = ab.log_probs_and_entropy(actor, acts)
            vals = _critic_values(critic, obs)
            return ppo_losses(logp, old_logp, adv, vals, old_vals, tgt,
                              ent, cfg)[3]

        params = ([p for _, p in actor.params()]
                  + [p for _, p in critic.params()])
        assert gradcheck(loss, params) < 1e-4
    finally:
        set_compute_dtype(np.float32)


# -- rollout and training ----------------------------------------------------


def tiny_cfgs(tmp):
    cfg = PpoConfig(num_steps=8, num_envs=2, minibatch_size=16,
                    num_epochs=2, total_steps=32, seed=0)
    env_cfg = EnvConfig(n_qubits=3, n_gates=10, seed=0, max_steps=8)
    return cfg, env_cfg, str(tmp)


def test_train_smoke_writes_artifacts(tmp_path):
    cfg, env_cfg, out = tiny_cfgs(tmp_path)
    result = train(cfg, env_cfg, out)
    for name in ("metrics.csv", "episodes.csv", "policy.ckpt"):
        assert os.path.exists(os.path.join(out, name))
    assert result.checkpoint_path.endswith("policy.ckpt")
    with open(result.metrics_path) as f:
        lines = f.read().strip().splitlines()
    assert lines[0].startswith("step,")
    assert len(lines) == 1 + cfg.total_steps // (cfg.num_steps * cfg.num_envs)


def test_train_deterministic_for_fixed_seed(tmp_path):
    cfg, env_cfg, _ = tiny_cfgs(tmp_path)
    a = str(tmp_path / "a")
    b = str(tmp_path / "b")
    train(cfg, env_cfg, a)
    train(cfg, env_cfg, b)
    for name in ("metrics.csv", "episodes.csv", "policy.ckpt"):
        with open(os.path.join(a, name), "rb") as f:
            blob_a = f.read()
        with open(os.path.join(b, name), "rb") as f:
            blob_b = f.read()
        assert blob_a == blob_b, name


def test_run_episode_random_policy():
    env = ZxEnv(EnvConfig(n_qubits=3, n_gates=12, seed=0))
    total = run_episode(None, env, episode_seed=5,
                        rng=np.random.default_rng(5))
    assert isinstance(total, int) and total >= 0


def test_evaluate_deterministic_and_offset_consistent():
    env_cfg = EnvConfig(n_qubits=3, n_gates=12, seed=0, max_steps=10)
    full = evaluate(None, env_cfg, 6, seed=3)
    again = evaluate(None, env_cfg, 6, seed=3)
    assert full == again
    head = evaluate(None, env_cfg, 3, seed=3)
    tail = evaluate(None, env_cfg, 3, seed=3, episode_offset=3)
    assert head + tail == full
    assert all(row["time_ms"] == 0 for row in full)


def test_micro_batch_divides_minibatch_default():
    cfg = PpoConfig()
    assert cfg.minibatch_size % MICRO_BATCH == 0
