"""A small end-to-end training run of the circuit-optimizing agent.

The agent edits a 4-qubit circuit under a 20-gate budget, rewarded for
raising QFI and entanglement while cutting depth and gate count relative
to the episode's starting circuit. Twelve episodes keep this demo under
a minute; the `qsopt train` command runs the full pipeline with CSV and
checkpoint outputs.

Run:  python3 demos/06_training_run.py
"""

import time

from qsopt.backend import BackendSpec
from qsopt.circuit import emit, ghz
from qsopt.ddqn import AgentConfig, train
from qsopt.env import EnvConfig

env_cfg = EnvConfig(
    n_qubits=4,
    max_gates=20,
    max_steps_per_episode=15,
    shots=0,                                  # exact QFI, dense backend
    backend=BackendSpec(kind="statevector"),
)
agent_cfg = AgentConfig(memory_size=500, batch_size=32)

print("training: 4 qubits, 20-gate budget, 12 episodes, seed 1")
t0 = time.perf_counter()
result = train(agent_cfg, env_cfg, [ghz(4)], episodes=12, seed=1)
print(f"done in {time.perf_counter() - t0:.1f}s, "
      f"{result.train_steps} gradient steps, {result.syncs} target syncs")
print()

print(f"{'ep':>3} {'return':>8} {'qfi':>6} {'entropy':>8} {'depth':>6} "
      f"{'gates':>6} {'eps':>6}")
for row in result.episode_rows:
    print(f"{row['episode']:>3} {row['return']:>8.3f} {row['final_qfi']:>6.3f} "
          f"{row['final_entropy']:>8.3f} {row['final_depth']:>6d} "
          f"{row['final_gates']:>6d} {row['epsilon']:>6.3f}")

print()
base, best = result.baseline_record, result.best_record
print(f"baseline: qfi {base.qfi_norm:.3f}  entropy {base.entropy_norm:.3f}  "
      f"depth {base.depth}  gates {base.gate_count}")
print(f"best:     qfi {best.qfi_norm:.3f}  entropy {best.entropy_norm:.3f}  "
      f"depth {best.depth}  gates {best.gate_count}  "
      f"(objective {result.best_objective:.4f})")
print()
print("best circuit found:")
print(emit(result.best_circuit), end="")
