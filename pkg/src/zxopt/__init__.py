"""ZX-diagram based quantum circuit optimization toolkit."""

from .circuit_ir import (
    Circuit,
    Gate,
    GateCounts,
    circuit_to_diagram,
    cnot,
    count_gates,
    cz,
    emit_circuit,
    h,
    parse_circuit,
    peephole_optimize,
    random_circuit,
    rz,
    s,
    sdg,
    t,
    tdg,
    z,
)
from .extraction import ExtractionStalled, extract
from .rewrite_rules import (
    ActionTag,
    RewriteAction,
    RuleError,
    STOP,
    action_is_valid,
    apply_action,
    boundary_pivot,
    enumerate_actions,
    gadget_fusion,
    identity_remove,
    local_complement,
    pivot,
)
from .autodiff import Tensor, gradcheck, parameter
from .gnn import (
    ActorNet,
    CheckpointError,
    CriticNet,
    Graph,
    checkpoint_load,
    checkpoint_save,
    set_compute_dtype,
    union_graphs,
)
from .ppo import (
    Adam,
    PpoConfig,
    TrainResult,
    agent_optimize,
    clip_grad_norm,
    clipped_surrogate,
    compute_gae,
    evaluate,
    ppo_losses,
    run_episode,
    train,
)
from .rl_env import (
    EnvConfig,
    PolicyGraph,
    VecEnv,
    ZxEnv,
    build_policy_graph,
)
from .simplifier import num_interior_spiders, reduce_all
from .verifier import (
    Tableau,
    equivalent,
    equivalent_clifford,
    equivalent_dense,
    tableau_of,
    unitary_of,
)
from .zx_graph import (
    DiagramError,
    EdgeType,
    ParseError,
    VertexKind,
    ZxDiagram,
    deserialize,
    is_graph_like,
    new_diagram,
    serialize,
    to_graph_like,
)

__version__ = "0.1.0"
