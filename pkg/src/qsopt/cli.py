"""Command line front end: train / simulate / compare / report.

A single JSON file drives a training run (schema in the README). All
outputs are deterministic for a fixed config and seed except wall-time
fields, which live in dedicated trailing columns.
"""

import os
import sys


def _apply_thread_cap():
    # honored only if set before the first numpy import in this process
    cap = os.environ.get("QSOPT_THREADS")
    if not cap:
        return
    if not cap.isdigit() or int(cap) < 1:
        print(f"warning: ignoring QSOPT_THREADS={cap!r} (want a positive integer)",
              file=sys.stderr)
        return
    for var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(var, cap)


_apply_thread_cap()

import argparse
import csv
import json
import math
import time
from dataclasses import asdict
from pathlib import Path

import numpy as np

from . import circuit as circ
from . import metrics, noise, plots
from .backend import BackendSpec
from .circuit import ParseError
from .ddqn import AgentConfig, train
from .env import EnvConfig
from .metrics import RewardWeights
from .noise import NoiseConfigError, NoiseParams
from .statevector import CapacityError

EPISODE_FIELDS = ["episode", "return", "steps", "final_qfi", "final_entropy",
                  "final_depth", "final_gates", "epsilon", "lr", "threshold",
                  "loss", "wall_time_s"]
STEP_FIELDS = ["episode", "step", "action", "action_name", "reward", "invalid",
               "injected", "qfi", "entropy", "depth", "gates", "epsilon"]


class ConfigError(Exception):
    pass


# --- configuration --------------------------------------------------------

def _build_backend(env_dict: dict) -> BackendSpec:
    return BackendSpec(
        kind=env_dict.pop("backend", "mps"),
        chi_max=env_dict.pop("chi_max", 64),
        trunc_tol=env_dict.pop("trunc_tol", 1e-10),
        dense_cap=env_dict.pop("dense_cap", 14),
    )


def load_run_config(path: Path):
    """Parse and validate a run config; returns everything cmd_train needs."""
    try:
        raw = json.loads(path.read_text(encoding="utf-8"))
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ConfigError(f"config {path} is not valid JSON: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError("config root must be a JSON object")
    base = path.parent
    try:
        episodes = int(raw.get("episodes", 50))
        if not 1 <= episodes <= 10_000:
            raise ConfigError(f"episodes={episodes} outside [1, 10000]")
        seed = int(raw.get("seed", 0))
        env_dict = dict(raw.get("env") or {})
        backend = _build_backend(env_dict)
        angle_catalog = tuple(float(a) for a in env_dict.pop(
            "angle_catalog", (math.pi / 4.0, math.pi / 2.0)))
        weights = RewardWeights(**(raw.get("weights") or {}))
        noise_dict = raw.get("noise")
        noise_params = NoiseParams(**noise_dict) if noise_dict else None
        env_cfg = EnvConfig(weights=weights, backend=backend, noise=noise_params,
                            angle_catalog=angle_catalog, **env_dict)
        agent_cfg = AgentConfig(**(raw.get("agent") or {}))
    except (NoiseConfigError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc
    except TypeError as exc:
        raise ConfigError(f"unrecognized config key: {exc}") from exc
    initial_paths = raw.get("initial_circuits") or []
    initials = []
    for rel in initial_paths:
        cpath = base / rel
        try:
            c = circ.parse_file(cpath)
        except OSError as exc:
            raise ConfigError(f"cannot read initial circuit {cpath}: {exc}") from exc
        except ParseError as exc:
            raise ConfigError(f"{cpath}: {exc}") from exc
        initials.append(c)
    if not initials:
        initials = [circ.ghz(env_cfg.n_qubits)]
    out_dir = base / raw.get("output_dir", "out")
    return env_cfg, agent_cfg, initials, episodes, seed, out_dir


def _write_csv(path: Path, fieldnames, rows) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        writer = csv.DictWriter(fh, fieldnames=fieldnames, lineterminator="\n")
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


# --- train ----------------------------------------------------------------

def _summary_text(env_cfg, result) -> str:
    base = result.baseline_record
    best = result.best_record
    d_pct = 100.0 * metrics.depth_ratio(base.depth, best.depth)
    g_pct = 100.0 * metrics.gate_ratio(base.gate_count, best.gate_count)
    lines = [
        "Run summary (best circuit vs episode-initial baseline)",
        "",
        f"{'Qubits':>8} {'QFI':>8} {'Entropy':>8} {'Depth red %':>12} {'Gates red %':>12}",
        f"{env_cfg.n_qubits:>8} {best.qfi_norm:>8.4f} {best.entropy_norm:>8.4f} "
        f"{d_pct:>12.2f} {g_pct:>12.2f}",
        "",
        f"{'':>10} {'initial':>10} {'final':>10}",
        f"{'qfi':>10} {base.qfi_norm:>10.4f} {best.qfi_norm:>10.4f}",
        f"{'entropy':>10} {base.entropy_norm:>10.4f} {best.entropy_norm:>10.4f}",
        f"{'depth':>10} {base.depth:>10d} {best.depth:>10d}",
        f"{'gates':>10} {base.gate_count:>10d} {best.gate_count:>10d}",
        "",
        f"objective (weighted delta sum): {result.best_objective:.6f}",
        f"training steps: {result.train_steps}, target syncs: {result.syncs}",
        f"final entanglement threshold: {result.final_threshold:.4f}",
    ]
    return "\n".join(lines) + "\n"


def cmd_train(args) -> int:
    env_cfg, agent_cfg, initials, episodes, seed, out_dir = load_run_config(
        Path(args.config))
    out_dir.mkdir(parents=True, exist_ok=True)
    result = train(agent_cfg, env_cfg, initials, episodes, seed)
    _write_csv(out_dir / "episodes.csv", EPISODE_FIELDS, result.episode_rows)
    _write_csv(out_dir / "steps.csv", STEP_FIELDS, result.step_rows)
    if result.initial_circuit is not None:
        circ.emit_file(result.initial_circuit, out_dir / "initial_circuit.qc")
    if result.best_circuit is not None:
        circ.emit_file(result.best_circuit, out_dir / "final_circuit.qc")
    result.net.save(out_dir / "checkpoint.bin",
                    extra={"agent": asdict(agent_cfg), "seed": seed,
                           "episodes": episodes})
    if result.best_record is not None:
        (out_dir / "summary.txt").write_text(_summary_text(env_cfg, result),
                                             encoding="utf-8")
    if result.interrupted:
        (out_dir / "partial_run.marker").write_text(
            f"interrupted after {len(result.episode_rows)} episodes\n", encoding="utf-8")
        print(f"interrupted; partial outputs in {out_dir}", file=sys.stderr)
        return 2
    print(f"run complete; outputs in {out_dir}")
    return 0


# --- simulate / compare ---------------------------------------------------

def _spec_from_args(args, kind=None) -> BackendSpec:
    return BackendSpec(kind=kind or args.backend, chi_max=args.chi_max,
                       trunc_tol=args.trunc_tol, dense_cap=args.dense_cap)


def _timed_run(spec: BackendSpec, circuit):
    t0 = time.perf_counter()
    state = spec.run(circuit)
    return state, time.perf_counter() - t0


def _memory_estimate(spec: BackendSpec, state) -> int:
    if spec.kind == "mps":
        return state.peak_stats().memory_bytes
    return (2 ** state.n_qubits) * 16


def cmd_simulate(args) -> int:
    if args.shots < 1:
        raise ConfigError(f"shots must be >= 1, got {args.shots}")
    circuit = circ.parse_file(args.circuit)
    spec = _spec_from_args(args)
    state, elapsed = _timed_run(spec, circuit)
    rng = np.random.default_rng(args.seed)
    t0 = time.perf_counter()
    counts = state.sample(args.shots, rng)
    elapsed += time.perf_counter() - t0
    entropies = state.bond_entropies() if circuit.n_qubits >= 2 else []
    report = {
        "backend": spec.kind,
        "n_qubits": circuit.n_qubits,
        "shots": args.shots,
        "seed": args.seed,
        "counts": counts,
        "bond_entropies": entropies,
        "entropy_norm": metrics.entropy_norm(state),
        "depth": circ.depth(circuit),
        "gate_count": circ.gate_count(circuit),
        "wall_time_s": elapsed,
        "peak_memory_bytes": _memory_estimate(spec, state),
    }
    if spec.kind == "mps":
        report["max_bond"] = state.peak_stats().max_bond
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


def cmd_compare(args) -> int:
    if args.shots < 1:
        raise ConfigError(f"shots must be >= 1, got {args.shots}")
    circuit = circ.parse_file(args.circuit)
    dense_spec = _spec_from_args(args, kind="statevector")
    mps_spec = _spec_from_args(args, kind="mps")
    dense_state, dense_time = _timed_run(dense_spec, circuit)  # raises over cap
    mps_state, mps_time = _timed_run(mps_spec, circuit)
    # wall times cover simulation plus a sampling pass, like a real workload
    t0 = time.perf_counter()
    dense_state.sample(args.shots, np.random.default_rng(args.seed))
    dense_time += time.perf_counter() - t0
    t0 = time.perf_counter()
    mps_state.sample(args.shots, np.random.default_rng(args.seed))
    mps_time += time.perf_counter() - t0
    p_dense = dense_state.probabilities()
    p_mps = np.abs(mps_state.to_dense()) ** 2
    tv = 0.5 * float(np.sum(np.abs(p_dense - p_mps)))
    report = {
        "n_qubits": circuit.n_qubits,
        "tv_distance": tv,
        "statevector": {"wall_time_s": dense_time,
                        "peak_memory_bytes": _memory_estimate(dense_spec, dense_state),
                        "entropy_norm": metrics.entropy_norm(dense_state)},
        "mps": {"wall_time_s": mps_time,
                "peak_memory_bytes": _memory_estimate(mps_spec, mps_state),
                "entropy_norm": metrics.entropy_norm(mps_state),
                "max_bond": mps_state.peak_stats().max_bond,
                "chi_max": mps_spec.chi_max},
    }
    print(json.dumps(report, indent=2, sort_keys=True))
    return 0


# --- report ---------------------------------------------------------------

CURVES = [
    ("reward_curve", "return", "episode return"),
    ("entropy_curve", "final_entropy", "entropy_norm"),
    ("depth_curve", "final_depth", "depth"),
    ("gates_curve", "final_gates", "gate count"),
]


def _composition_rows(circuit):
    comp = circ.composition(circuit)
    return [{"gate": kind.value, "count": comp.counts[kind],
             "fraction": comp.fractions.get(kind, 0.0)}
            for kind in circ.GateKind]


def cmd_report(args) -> int:
    run_dir = Path(args.dir)
    episodes_path = run_dir / "episodes.csv"
    if not episodes_path.exists():
        raise FileNotFoundError(f"no episodes.csv in {run_dir}")
    with open(episodes_path, encoding="utf-8", newline="") as fh:
        rows = list(csv.DictReader(fh))
    for stem, column, label in CURVES:
        xs = [int(r["episode"]) for r in rows]
        ys = [float(r[column]) for r in rows]
        _write_csv(run_dir / f"{stem}.csv", ["episode", column],
                   [{"episode": x, column: r[column]} for x, r in zip(xs, rows)])
        (run_dir / f"{stem}.svg").write_text(
            plots.line_svg(xs, ys, stem.replace("_", " "), "episode", label),
            encoding="utf-8")
    for tag in ("initial", "final"):
        cpath = run_dir / f"{tag}_circuit.qc"
        if not cpath.exists():
            raise FileNotFoundError(f"missing {cpath}")
        rows_c = _composition_rows(circ.parse_file(cpath))
        name = "composition_before" if tag == "initial" else "composition_after"
        _write_csv(run_dir / f"{name}.csv", ["gate", "count", "fraction"], rows_c)
        (run_dir / f"{name}.svg").write_text(
            plots.pie_svg([r["gate"] for r in rows_c],
                          [r["fraction"] for r in rows_c],
                          name.replace("_", " ")),
            encoding="utf-8")
    print(f"report written to {run_dir}")
    return 0


# --- entry point ----------------------------------------------------------

def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="qsopt",
        description="Quantum sensor circuit optimization: DDQN agent over "
                    "MPS/statevector simulation.")
    sub = parser.add_subparsers(dest="command", required=True)

    p_train = sub.add_parser("train", help="run a training job from a JSON config")
    p_train.add_argument("--config", required=True, help="path to run config JSON")
    p_train.set_defaults(func=cmd_train)

    def add_backend_flags(p, with_kind: bool):
        if with_kind:
            p.add_argument("--backend", choices=["mps", "statevector"], default="mps")
        p.add_argument("--chi-max", type=int, default=64, dest="chi_max")
        p.add_argument("--trunc-tol", type=float, default=1e-10, dest="trunc_tol")
        p.add_argument("--dense-cap", type=int, default=14, dest="dense_cap",
                       help="statevector qubit cap (raise explicitly up to 20)")

    p_sim = sub.add_parser("simulate", help="simulate a circuit and sample it")
    p_sim.add_argument("--circuit", required=True)
    add_backend_flags(p_sim, with_kind=True)
    p_sim.add_argument("--shots", type=int, default=5000)
    p_sim.add_argument("--seed", type=int, default=0)
    p_sim.set_defaults(func=cmd_simulate)

    p_cmp = sub.add_parser("compare", help="run both backends, report TV distance")
    p_cmp.add_argument("--circuit", required=True)
    add_backend_flags(p_cmp, with_kind=False)
    p_cmp.add_argument("--shots", type=int, default=5000)
    p_cmp.add_argument("--seed", type=int, default=0)
    p_cmp.set_defaults(func=cmd_compare)

    p_rep = sub.add_parser("report", help="curves and composition tables for a run")
    p_rep.add_argument("--dir", required=True, help="training output directory")
    p_rep.set_defaults(func=cmd_report)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, ParseError, NoiseConfigError, CapacityError,
            FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except KeyboardInterrupt:
        print("interrupted", file=sys.stderr)
        return 2
    except Exception as exc:  # runtime failures map to exit 2
        print(f"runtime error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
