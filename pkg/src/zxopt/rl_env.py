"""Reinforcement-learning environment over graph-like diagrams.

States are diagrams, actions are rewrites (local complementation, pivot,
boundary pivot, identity removal, stop), and the reward for a step is the
drop in extracted-circuit gate count divided by an expected-compression
normalizer.  Observations are attention-network graphs: one node per spider,
one node per feasible action, a stop node linked to everything, and one-hot
edge types distinguishing diagram wires, action-to-spider links and
action-to-action links.
"""

from __future__ import annotations

import math
import random
from dataclasses import dataclass, field

import numpy as np

from .circuit_ir import circuit_to_diagram, random_circuit
from .extraction import extract
from .gnn import Graph
from .rewrite_rules import (
    ActionTag,
    RewriteAction,
    apply_action_inplace,
    enumerate_actions,
)
from .zx_graph import EdgeType, ZxDiagram, to_graph_like

DEFAULT_MAX_STEPS = 200
FALLBACK_COMPRESSION = 0.2

# edge one-hot states
EDGE_WIRE = 0
EDGE_ACTION_SPIDER = 1
EDGE_ACTION_ACTION = 2

# actor feature layout
F_SIN, F_COS, F_BOUNDARY, F_LCOMP, F_PIVOT, F_STOP, F_ID = range(7)

_RULE_FLAG = {
    ActionTag.LOCAL_COMP: F_LCOMP,
    ActionTag.PIVOT: F_PIVOT,
    ActionTag.BOUNDARY_PIVOT: F_PIVOT,
    ActionTag.IDENTITY_REMOVE: F_ID,
    ActionTag.STOP: F_STOP,
}


@dataclass
class EnvConfig:
    n_qubits: int = 5
    n_gates: int = 25
    gate_set: str = "clifford"
    max_steps: int = DEFAULT_MAX_STEPS
    normalizer_table: dict[tuple[int, int], float] = field(default_factory=dict)
    seed: int = 0

    def normalizer(self) -> float:
        val = self.normalizer_table.get((self.n_qubits, self.n_gates))
        if val is None:
            val = FALLBACK_COMPRESSION * self.n_gates
        return max(float(val), 1e-9)


@dataclass
class PolicyGraph:
    """Actor and critic views of one diagram state."""

    actor_graph: Graph
    critic_graph: Graph
    action_nodes: np.ndarray  # indices into actor_graph nodes
    actions: list[RewriteAction]


@dataclass
class StepResult:
    observation: PolicyGraph
    reward: float
    done: bool
    info: dict


def _one_hot(state: int) -> list[float]:
    e = [0.0, 0.0, 0.0]
    e[state] = 1.0
    return e


def build_policy_graph(d: ZxDiagram, actions: list[RewriteAction]) -> PolicyGraph:
    """Featurize a diagram plus its feasible actions for the networks."""
    spiders = d.spiders()
    node_of = {v: i for i, v in enumerate(spiders)}
    n_spiders = len(spiders)
    n_nodes = n_spiders + len(actions)

    feats = np.zeros((n_nodes, 7))
    for v, i in node_of.items():
        phi = d.phase(v) * math.pi / 4
        feats[i, F_SIN] = math.sin(phi)
        feats[i, F_COS] = math.cos(phi)
        feats[i, F_BOUNDARY] = 1.0 if d.boundary_neighbors(v) else 0.0

    src: list[int] = []
    dst: list[int] = []
    efs: list[list[float]] = []

    def undirected(a: int, b: int, state: int) -> None:
        e = _one_hot(state)
        src.extend((a, b))
        dst.extend((b, a))
        efs.extend((e, e))

    for u, v, t in d.edges():
        if u in node_of and v in node_of:
            undirected(node_of[u], node_of[v], EDGE_WIRE)

    action_nodes = np.arange(n_spiders, n_nodes)
    stop_idx = None
    for k, act in enumerate(actions):
        i = n_spiders + k
        feats[i, _RULE_FLAG[act.tag]] = 1.0
        if act.tag is ActionTag.STOP:
            stop_idx = i
            continue
        for v in act.vertices:
            undirected(i, node_of[v], EDGE_ACTION_SPIDER)
    for a in range(n_spiders, n_nodes):
        for b in range(a + 1, n_nodes):
            if stop_idx in (a, b):
                continue
            undirected(a, b, EDGE_ACTION_ACTION)
    if stop_idx is not None:
        for j in range(n_nodes):
            if j == stop_idx:
                continue
            state = EDGE_ACTION_ACTION if j >= n_spiders else EDGE_ACTION_SPIDER
            undirected(stop_idx, j, state)
    for i in range(n_nodes):
        src.append(i)
        dst.append(i)
        efs.append([0.0, 0.0, 0.0])

    actor_graph = Graph(feats, src, dst, efs)

    c_src: list[int] = []
    c_dst: list[int] = []
    c_efs: list[list[float]] = []
    for u, v, t in d.edges():
        if u in node_of and v in node_of:
            e = _one_hot(EDGE_WIRE)
            c_src.extend((node_of[u], node_of[v]))
            c_dst.extend((node_of[v], node_of[u]))
            c_efs.extend((e, e))
    for i in range(n_spiders):
        c_src.append(i)
        c_dst.append(i)
        c_efs.append([0.0, 0.0, 0.0])
    critic_graph = Graph(feats[:n_spiders, :3], c_src, c_dst, c_efs)

    return PolicyGraph(actor_graph, critic_graph, action_nodes, list(actions))


class ZxEnv:
    """One episode stream of diagram-optimization problems."""

    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self._rng = random.Random(cfg.seed)
        self._diagram: ZxDiagram | None = None
        self._obs: PolicyGraph | None = None
        self._steps = 0
        self._gates_now = 0
        self._gates_initial = 0
        self._done = True
        self.episode_seed: int | None = None

    # -- helpers -----------------------------------------------------------

    def _extracted_total(self) -> int:
        return len(extract(self._diagram).gates)

    def _observe(self) -> PolicyGraph:
        actions = enumerate_actions(self._diagram)
        return build_policy_graph(self._diagram, actions)

    def _info(self) -> dict:
        return {
            "gates_now": self._gates_now,
            "gates_initial": self._gates_initial,
            "actions_available": len(self._obs.actions),
        }

    # -- gym-style API -----------------------------------------------------

    def reset(self, episode_seed: int | None = None) -> StepResult:
        if episode_seed is None:
            episode_seed = self._rng.randrange(2**31)
        self.episode_seed = episode_seed
        c = random_circuit(self.cfg.n_qubits, self.cfg.n_gates,
                           self.cfg.gate_set, seed=episode_seed)
        self._diagram = to_graph_like(circuit_to_diagram(c))
        self._gates_initial = self._gates_now = self._extracted_total()
        self._steps = 0
        self._obs = self._observe()
        self._done = len(self._obs.actions) <= 1
        return StepResult(self._obs, 0.0, self._done, self._info())

    def step(self, action_idx: int) -> StepResult:
        if self._done:
            raise RuntimeError("episode is over; call reset()")
        actions = self._obs.actions
        if not 0 <= action_idx < len(actions):
            raise IndexError(f"action index {action_idx} out of range")
        action = actions[action_idx]
        self._steps += 1
        if action.tag is ActionTag.STOP:
            self._done = True
            return StepResult(self._obs, 0.0, True, self._info())
        apply_action_inplace(self._diagram, action)
        new_total = self._extracted_total()
        reward = (self._gates_now - new_total) / self.cfg.normalizer()
        self._gates_now = new_total
        self._obs = self._observe()
        self._done = (len(self._obs.actions) <= 1
                      or self._steps >= self.cfg.max_steps)
        return StepResult(self._obs, reward, self._done, self._info())


class VecEnv:
    """Fixed set of independent environments with auto-reset on episode end.

    Per-instance seeding is ``seed + env_index`` so results do not depend on
    stepping order.
    """

    def __init__(self, cfg: EnvConfig, num_envs: int):
        self.envs = []
        for i in range(num_envs):
            env_cfg = EnvConfig(
                n_qubits=cfg.n_qubits, n_gates=cfg.n_gates,
                gate_set=cfg.gate_set, max_steps=cfg.max_steps,
                normalizer_table=cfg.normalizer_table, seed=cfg.seed + i,
            )
            self.envs.append(ZxEnv(env_cfg))
        self.num_envs = num_envs

    def _reset_live(self, env: ZxEnv) -> StepResult:
        # skip the rare degenerate episode that starts with only Stop feasible
        for _ in range(100):
            res = env.reset()
            if not res.done:
                return res
        raise RuntimeError("could not generate an episode with feasible actions")

    def reset(self) -> list[StepResult]:
        return [self._reset_live(env) for env in self.envs]

    def step(self, action_idxs: list[int]) -> list[StepResult]:
        """Step every env; finished episodes report their terminal reward and
        ``done`` and the observation of the freshly reset episode."""
        out = []
        for env, a in zip(self.envs, action_idxs):
            res = env.step(a)
            if res.done:
                fresh = self._reset_live(env)
                res = StepResult(fresh.observation, res.reward, True, res.info)
            out.append(res)
        return out
