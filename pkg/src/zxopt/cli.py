"""Command-line interface.

Subcommands cover the whole pipeline: circuit generation, gate-level peephole
optimization, diagram simplification (fixed-point or trained agent), circuit
extraction, equivalence checking, reward-normalizer calibration, PPO training,
policy evaluation and benchmark sweeps.  Every subcommand is deterministic
under a fixed seed and all file outputs are byte-stable.
"""

from __future__ import annotations

import argparse
import multiprocessing
import os
import sys

import numpy as np

from .circuit_ir import (
    count_gates,
    circuit_to_diagram,
    emit_circuit,
    parse_circuit,
    peephole_optimize,
    random_circuit,
)
from .extraction import extract
from .gnn import ActorNet, CriticNet, checkpoint_load
from .ppo import PpoConfig, agent_optimize, evaluate, train
from .rl_env import EnvConfig
from .simplifier import reduce_all
from .verifier import equivalent_clifford, equivalent_dense
from .zx_graph import deserialize, serialize


# -- config files ------------------------------------------------------------
#
# Flat ``key = value`` lines mirroring the PpoConfig / EnvConfig field names.
# ``normalizer_table`` holds comma-separated ``qubits:gates:value`` triples
# (the format ``calibrate`` emits).  ``ZXOPT_SEED`` overrides ``seed``.


def parse_config(text: str) -> dict[str, str]:
    out: dict[str, str] = {}
    for line in text.splitlines():
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ValueError(f"expected 'key = value', got {line!r}")
        key, val = line.split("=", 1)
        out[key.strip()] = val.strip()
    return out


def parse_normalizer_table(text: str) -> dict[tuple[int, int], float]:
    table: dict[tuple[int, int], float] = {}
    for entry in text.split(","):
        entry = entry.strip()
        if not entry:
            continue
        q, g, v = entry.split(":")
        table[(int(q), int(g))] = float(v)
    return table


def format_normalizer_table(table: dict[tuple[int, int], float]) -> str:
    entries = ",".join(f"{q}:{g}:{v:.6f}" for (q, g), v in sorted(table.items()))
    return f"normalizer_table = {entries}\n"


def _coerce(value: str, like) -> object:
    if isinstance(like, bool):
        return value.lower() in ("1", "true", "yes", "on")
    return type(like)(value)


def build_configs(raw: dict[str, str]) -> tuple[PpoConfig, EnvConfig]:
    ppo_kw: dict[str, object] = {}
    env_kw: dict[str, object] = {}
    ppo_defaults = PpoConfig()
    env_defaults = EnvConfig()
    for key, val in raw.items():
        if key == "normalizer_table":
            env_kw[key] = parse_normalizer_table(val)
        elif hasattr(ppo_defaults, key):
            ppo_kw[key] = _coerce(val, getattr(ppo_defaults, key))
        elif hasattr(env_defaults, key):
            env_kw[key] = _coerce(val, getattr(env_defaults, key))
        else:
            raise ValueError(f"unknown config key {key!r}")
    seed_env = os.environ.get("ZXOPT_SEED")
    if seed_env is not None:
        ppo_kw["seed"] = int(seed_env)
        env_kw["seed"] = int(seed_env)
    else:
        env_kw.setdefault("seed", int(ppo_kw.get("seed", ppo_defaults.seed)))
    return PpoConfig(**ppo_kw), EnvConfig(**env_kw)


# -- helpers -----------------------------------------------------------------


def _read(path: str) -> str:
    with open(path) as f:
        return f.read()


def _write(path: str, text: str) -> None:
    with open(path, "w") as f:
        f.write(text)


def _load_actor(path: str) -> ActorNet:
    rng = np.random.default_rng(0)
    nets = {"actor": ActorNet(rng), "critic": CriticNet(rng)}
    checkpoint_load(nets, path)
    return nets["actor"]


def _write_csv(path: str, header: list[str], rows: list[list]) -> None:
    lines = [",".join(header)]
    for row in rows:
        lines.append(",".join(str(x) for x in row))
    _write(path, "\n".join(lines) + "\n")


# -- subcommands -------------------------------------------------------------


def cmd_gen(args) -> int:
    c = random_circuit(args.qubits, args.gates, args.set, seed=args.seed)
    _write(args.out, emit_circuit(c))
    return 0


def cmd_peephole(args) -> int:
    c = peephole_optimize(parse_circuit(_read(args.inp)))
    _write(args.out, emit_circuit(c))
    return 0


def cmd_simplify(args) -> int:
    c = parse_circuit(_read(args.inp))
    if args.method == "reduce-all":
        out = extract(reduce_all(circuit_to_diagram(c), gadgets=args.gadgets))
    else:
        if not args.checkpoint:
            raise ValueError("--method agent requires --checkpoint")
        out = agent_optimize(_load_actor(args.checkpoint), c)
    if args.peephole:
        out = peephole_optimize(out)
    _write(args.out, emit_circuit(out))
    return 0


def cmd_extract(args) -> int:
    c = extract(deserialize(_read(args.inp)))
    _write(args.out, emit_circuit(c))
    return 0


def cmd_verify(args) -> int:
    a = parse_circuit(_read(args.a))
    b = parse_circuit(_read(args.b))
    if args.mode == "tableau":
        ok = equivalent_clifford(a, b)
    else:
        ok = equivalent_dense(a, b)
    print("equivalent" if ok else "NOT equivalent")
    return 0 if ok else 1


def cmd_calibrate(args) -> int:
    """Store max(1, mean(initial - simplified total)) over random circuits as
    the expected-compression normalizer for (qubits, gates)."""
    drops = []
    for i in range(args.samples):
        c = random_circuit(args.qubits, args.gates, args.set,
                           seed=args.seed * 1_000_003 + i)
        reduced = extract(reduce_all(circuit_to_diagram(c)))
        drops.append(args.gates - len(reduced.gates))
    val = max(1.0, float(np.mean(drops)))
    _write(args.out, format_normalizer_table({(args.qubits, args.gates): val}))
    return 0


def cmd_train(args) -> int:
    cfg, env_cfg = build_configs(parse_config(_read(args.config)))
    train(cfg, env_cfg, args.out_dir, progress=args.progress)
    return 0


def _eval_chunk(chunk_args) -> list[dict]:
    (checkpoint, env_kw, episodes, seed, peephole,
     gadgets, timing, offset) = chunk_args
    actor = _load_actor(checkpoint) if checkpoint else None
    return evaluate(actor, EnvConfig(**env_kw), episodes, seed=seed,
                    peephole=peephole, gadgets=gadgets, timing=timing,
                    episode_offset=offset)


def _eval_parallel(checkpoint: str | None, env_cfg: EnvConfig, episodes: int,
                   seed: int, peephole: bool, gadgets: bool, timing: bool,
                   jobs: int) -> list[dict]:
    env_kw = dict(n_qubits=env_cfg.n_qubits, n_gates=env_cfg.n_gates,
                  gate_set=env_cfg.gate_set, max_steps=env_cfg.max_steps)
    if jobs <= 1:
        return _eval_chunk((checkpoint, env_kw, episodes, seed, peephole,
                            gadgets, timing, 0))
    per = (episodes + jobs - 1) // jobs
    chunks = [(checkpoint, env_kw, min(per, episodes - off), seed, peephole,
               gadgets, timing, off)
              for off in range(0, episodes, per)]
    with multiprocessing.Pool(jobs) as pool:
        parts = pool.map(_eval_chunk, chunks)
    return [row for part in parts for row in part]


EVAL_HEADER = ["seed", "agent_total", "agent_2q", "baseline_total",
               "baseline_2q", "time_ms"]


def cmd_eval(args) -> int:
    env_cfg = EnvConfig(n_qubits=args.qubits, n_gates=args.gates,
                        gate_set=args.set)
    rows = _eval_parallel(args.checkpoint, env_cfg, args.episodes, args.seed,
                          args.peephole, args.gadgets, args.timing, args.jobs)
    _write_csv(args.out, EVAL_HEADER,
               [[r[k] for k in EVAL_HEADER] for r in rows])
    return 0


_BENCH_ACTOR: ActorNet | None = None


def _bench_init(checkpoint: str | None) -> None:
    global _BENCH_ACTOR
    _BENCH_ACTOR = _load_actor(checkpoint) if checkpoint else None


def _bench_one(task) -> dict[str, tuple]:
    """Per-method (total, 2q, peephole total, peephole 2q) for one circuit."""
    qubits, g0, gate_set, circuit_seed = task
    c = random_circuit(qubits, g0, gate_set, seed=circuit_seed)
    d = circuit_to_diagram(c)
    circs = {
        "no_action": extract(d),
        "reduce_all": extract(reduce_all(d)),
    }
    if _BENCH_ACTOR is not None:
        circs["agent"] = agent_optimize(_BENCH_ACTOR, c)
    out = {}
    for m, circ in circs.items():
        gc = count_gates(circ)
        pp = count_gates(peephole_optimize(circ))
        out[m] = (gc.total, gc.two_qubit, pp.total, pp.two_qubit)
    return out


def _bench_sweep(qubits: int, gate_counts: list[int], gate_set: str,
                 seeds: int, seed: int, checkpoint: str | None,
                 jobs: int) -> tuple[list[list], list[str]]:
    methods = ["no_action", "reduce_all"] + (["agent"] if checkpoint else [])
    rows = []
    for g0 in gate_counts:
        tasks = [(qubits, g0, gate_set, seed * 1_000_003 + g0 * 1000 + i)
                 for i in range(seeds)]
        if jobs <= 1:
            _bench_init(checkpoint)
            results = [_bench_one(t) for t in tasks]
        else:
            with multiprocessing.Pool(jobs, _bench_init,
                                      (checkpoint,)) as pool:
                results = pool.map(_bench_one, tasks)
        row = [g0]
        for m in methods:
            sums = np.sum([r[m] for r in results], axis=0) / seeds
            row += ["%.2f" % v for v in sums]
        rows.append(row)
    return rows, methods


def cmd_bench(args) -> int:
    os.makedirs(args.out, exist_ok=True)
    if args.which == "fig2":
        gate_counts = [50, 100, 200, 400]
        checkpoint = None
    else:  # fig6: same sweep, with the trained agent column
        gate_counts = [50, 100, 200, 400]
        checkpoint = args.checkpoint
        if not checkpoint:
            raise ValueError("bench fig6 requires --checkpoint")
    rows, methods = _bench_sweep(args.qubits, gate_counts, args.set,
                                 args.seeds, args.seed, checkpoint, args.jobs)
    header = ["initial_gates"]
    for m in methods:
        header += [f"{m}_total", f"{m}_2q", f"{m}_pp_total", f"{m}_pp_2q"]
    _write_csv(os.path.join(args.out, f"{args.which}.csv"), header, rows)
    return 0


# -- parser ------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="zxopt",
                                description="ZX-diagram circuit optimizer")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("gen", help="generate a random circuit")
    g.add_argument("--qubits", type=int, required=True)
    g.add_argument("--gates", type=int, required=True)
    g.add_argument("--set", choices=["clifford", "cliffordt"],
                   default="clifford")
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_gen)

    g = sub.add_parser("peephole", help="gate-level peephole optimization")
    g.add_argument("--in", dest="inp", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_peephole)

    g = sub.add_parser("simplify", help="simplify a circuit via its diagram")
    g.add_argument("--in", dest="inp", required=True)
    g.add_argument("--method", choices=["reduce-all", "agent"],
                   default="reduce-all")
    g.add_argument("--checkpoint")
    g.add_argument("--out", required=True)
    g.add_argument("--peephole", action="store_true")
    g.add_argument("--gadgets", action="store_true")
    g.set_defaults(func=cmd_simplify)

    g = sub.add_parser("extract", help="extract a circuit from a diagram file")
    g.add_argument("--in", dest="inp", required=True)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_extract)

    g = sub.add_parser("verify", help="check two circuits for equivalence")
    g.add_argument("a")
    g.add_argument("b")
    g.add_argument("--mode", choices=["tableau", "dense"], default="tableau")
    g.set_defaults(func=cmd_verify)

    g = sub.add_parser("calibrate", help="build the reward normalizer table")
    g.add_argument("--qubits", type=int, required=True)
    g.add_argument("--gates", type=int, required=True)
    g.add_argument("--set", choices=["clifford", "cliffordt"],
                   default="clifford")
    g.add_argument("--samples", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_calibrate)

    g = sub.add_parser("train", help="run PPO training")
    g.add_argument("--config", required=True)
    g.add_argument("--out-dir", required=True)
    g.add_argument("--progress", action="store_true")
    g.set_defaults(func=cmd_train)

    g = sub.add_parser("eval", help="evaluate a policy against the baseline")
    g.add_argument("--checkpoint")
    g.add_argument("--qubits", type=int, required=True)
    g.add_argument("--gates", type=int, required=True)
    g.add_argument("--set", choices=["clifford", "cliffordt"],
                   default="clifford")
    g.add_argument("--episodes", type=int, default=200)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--peephole", action="store_true")
    g.add_argument("--gadgets", action="store_true")
    g.add_argument("--timing", action="store_true")
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_eval)

    g = sub.add_parser("bench", help="benchmark sweeps over initial gates")
    g.add_argument("which", choices=["fig2", "fig6"])
    g.add_argument("--qubits", type=int, default=10)
    g.add_argument("--set", choices=["clifford", "cliffordt"],
                   default="clifford")
    g.add_argument("--seeds", type=int, default=100)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--checkpoint")
    g.add_argument("--jobs", type=int, default=1)
    g.add_argument("--out", required=True)
    g.set_defaults(func=cmd_bench)

    return p


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except BrokenPipeError:
        return 1
    except Exception as exc:  # uniform nonzero exit with message
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
