"""Markov decision process over circuit edits.

The agent sees a fixed-shape observation (a one-hot moment grid plus an
auxiliary feature vector) and picks from a discrete catalog of edits:
appending gates, removing or reordering the most recent gate on a qubit,
a cancellation pass, and two entanglement-restoring composites. Step
reward is the difference of the multi-objective value (vs. the episode's
initial circuit) between consecutive steps, so valid-action episode
returns telescope to the episode-level objective. Invalid actions leave
the circuit unchanged and cost a flat -0.1.

Whenever an edit leaves the aggregate entropy below the adaptive
threshold, an entanglement injection (H plus CX across the weakest bond)
fires automatically before metrics are computed.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import metrics
from .backend import BackendSpec
from .circuit import Circuit, Gate, GateKind, cancel_pairs, moments, swap_adjacent
from .noise import NoiseParams

INVALID_PENALTY = -0.1

# grid channel layout: one row per qubit, one column per moment
CH_EMPTY, CH_H, CH_RX, CH_RZ, CH_CX_CTRL, CH_CX_TGT, CH_CZ, CH_SWAP, CH_ANGLE = range(9)
N_CHANNELS = 9

TWO_PI = 2.0 * math.pi


class EnvError(Exception):
    """Protocol misuse: step before reset, out-of-range action, bad initial."""


@dataclass(frozen=True)
class EnvConfig:
    n_qubits: int
    max_gates: int
    max_steps_per_episode: int = 50
    entanglement_threshold: float = 0.7
    shots: int = 5000
    weights: metrics.RewardWeights = metrics.RewardWeights()
    angle_catalog: tuple[float, ...] = (math.pi / 4.0, math.pi / 2.0)
    backend: BackendSpec = BackendSpec()
    noise: NoiseParams | None = None

    def __post_init__(self):
        if self.n_qubits < 2:
            raise ValueError(f"need at least 2 qubits, got {self.n_qubits}")
        if self.max_gates < 1:
            raise ValueError("max_gates must be >= 1")
        if self.max_steps_per_episode < 1:
            raise ValueError("max_steps_per_episode must be >= 1")
        if not 0.0 <= self.entanglement_threshold <= 1.0:
            raise ValueError("entanglement_threshold must lie in [0, 1]")
        if self.shots < 0:
            raise ValueError("shots must be >= 0")
        if self.shots == 0 and self.backend.kind != "statevector":
            raise ValueError("shots=0 (exact QFI) requires the statevector backend")
        if not self.angle_catalog:
            raise ValueError("angle_catalog must not be empty")

    @property
    def grid_depth(self) -> int:
        # depth can never exceed the gate budget
        return self.max_gates


@dataclass(frozen=True)
class Action:
    name: str
    qubit: int | None = None
    pair: tuple[int, int] | None = None
    angle: float | None = None
    entangling: bool = False

    def label(self) -> str:
        if self.pair is not None:
            return f"{self.name}(q{self.pair[0]},q{self.pair[1]})"
        if self.angle is not None:
            return f"{self.name}(q{self.qubit},{self.angle:.4f})"
        if self.qubit is not None:
            return f"{self.name}(q{self.qubit})"
        return self.name


def action_catalog(cfg: EnvConfig) -> tuple[Action, ...]:
    """Deterministic enumeration; id 0 is always ADD_H on qubit 0."""
    n = cfg.n_qubits
    acts: list[Action] = []
    acts += [Action("add_h", qubit=q) for q in range(n)]
    for name in ("add_rx", "add_rz"):
        acts += [Action(name, qubit=q, angle=a)
                 for q in range(n) for a in cfg.angle_catalog]
    for name in ("add_cx", "add_cz", "add_swap"):
        acts += [Action(name, pair=(q, q + 1), entangling=True) for q in range(n - 1)]
    for name in ("remove_last", "swap_last_pair", "replace_last"):
        acts += [Action(name, qubit=q) for q in range(n)]
    acts.append(Action("cancel_pass"))
    acts.append(Action("inject", entangling=True))
    acts.append(Action("boost", entangling=True))
    return tuple(acts)


@dataclass(frozen=True)
class Observation:
    grid: np.ndarray  # (n_qubits, grid_depth, N_CHANNELS)
    aux: np.ndarray   # bond entropies (Bell units) + qfi + depth + gates


def encode(circuit: Circuit, record: metrics.MetricsRecord, cfg: EnvConfig) -> Observation:
    grid = np.zeros((cfg.n_qubits, cfg.grid_depth, N_CHANNELS))
    grid[:, :, CH_EMPTY] = 1.0
    for m, layer in enumerate(moments(circuit)):
        for idx in layer:
            g = circuit.gates[idx]
            for q in g.qubits:
                grid[q, m, CH_EMPTY] = 0.0
            if g.kind is GateKind.H:
                grid[g.qubits[0], m, CH_H] = 1.0
            elif g.kind is GateKind.RX or g.kind is GateKind.RZ:
                ch = CH_RX if g.kind is GateKind.RX else CH_RZ
                grid[g.qubits[0], m, ch] = 1.0
                grid[g.qubits[0], m, CH_ANGLE] = (g.angle % TWO_PI) / TWO_PI
            elif g.kind is GateKind.CX:
                grid[g.qubits[0], m, CH_CX_CTRL] = 1.0
                grid[g.qubits[1], m, CH_CX_TGT] = 1.0
            elif g.kind is GateKind.CZ:
                for q in g.qubits:
                    grid[q, m, CH_CZ] = 1.0
            else:
                for q in g.qubits:
                    grid[q, m, CH_SWAP] = 1.0
    bonds = metrics.bell_unit_entropies(record.bond_entropies)
    aux = np.array(bonds + [record.qfi_norm,
                            record.depth / cfg.grid_depth,
                            record.gate_count / cfg.max_gates])
    return Observation(grid, aux)


def aux_size(cfg: EnvConfig) -> int:
    return (cfg.n_qubits - 1) + 3


class CircuitEnv:
    def __init__(self, cfg: EnvConfig):
        self.cfg = cfg
        self.catalog = action_catalog(cfg)
        self.threshold = cfg.entanglement_threshold
        self._circuit: Circuit | None = None
        self._baseline: metrics.MetricsRecord | None = None
        self._record: metrics.MetricsRecord | None = None
        self._seeds: np.random.SeedSequence | None = None
        self._steps = 0
        self._prev_value = 0.0
        self._episode_entropies: list[float] = []

    # --- lifecycle --------------------------------------------------------

    def reset(self, initial: Circuit, seed=0) -> Observation:
        if initial.n_qubits != self.cfg.n_qubits:
            raise EnvError(f"initial circuit has {initial.n_qubits} qubits, "
                           f"config expects {self.cfg.n_qubits}")
        if len(initial) > self.cfg.max_gates:
            raise EnvError(f"initial circuit has {len(initial)} gates, "
                           f"budget is {self.cfg.max_gates}")
        self._seeds = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
        self._circuit = initial
        self._baseline = self._evaluate(initial)
        self._record = self._baseline
        self._steps = 0
        self._prev_value = 0.0
        self._episode_entropies = [self._baseline.entropy_norm]
        return encode(initial, self._record, self.cfg)

    @property
    def circuit(self) -> Circuit:
        self._require_reset()
        return self._circuit

    @property
    def baseline_record(self) -> metrics.MetricsRecord:
        self._require_reset()
        return self._baseline

    @property
    def record(self) -> metrics.MetricsRecord:
        self._require_reset()
        return self._record

    def _require_reset(self):
        if self._circuit is None:
            raise EnvError("environment used before reset()")

    def _evaluate(self, circuit: Circuit) -> metrics.MetricsRecord:
        return metrics.evaluate(circuit, self.cfg.backend, self.cfg.shots,
                                self._qfi_noise(), self._seeds.spawn(1)[0])

    def _qfi_noise(self):
        noise = self.cfg.noise
        if noise is not None and noise.enabled and noise.during_training:
            return noise
        return None

    # --- actions ----------------------------------------------------------

    def _budget_left(self, circuit: Circuit) -> int:
        return self.cfg.max_gates - len(circuit)

    def _last_touching(self, circuit: Circuit, qubit: int) -> int | None:
        for i in range(len(circuit.gates) - 1, -1, -1):
            if qubit in circuit.gates[i].qubits:
                return i
        return None

    def _below_threshold_bonds(self) -> list[int]:
        bonds = metrics.bell_unit_entropies(self._record.bond_entropies)
        return [k for k, s in enumerate(bonds, start=1) if s < self.threshold]

    def _inject(self, circuit: Circuit, record: metrics.MetricsRecord) -> Circuit:
        bond = 1 + int(np.argmin(record.bond_entropies))
        left = bond - 1
        return circuit.h(left).cx(left, bond)

    def apply_action(self, circuit: Circuit, action: Action) -> Circuit | None:
        """The edit an action denotes, or None when it is invalid now."""
        if action.name.startswith("add_"):
            if self._budget_left(circuit) < 1:
                return None
            kind = GateKind[action.name[4:].upper()]
            qubits = action.pair if action.pair is not None else (action.qubit,)
            return circuit.append(Gate(kind, tuple(qubits), action.angle))
        if action.name == "remove_last":
            i = self._last_touching(circuit, action.qubit)
            if i is None:
                return None
            gs = circuit.gates
            return Circuit(circuit.n_qubits, gs[:i] + gs[i + 1:])
        if action.name == "swap_last_pair":
            i = self._last_touching(circuit, action.qubit)
            if i is None or i == 0:
                return None
            if circuit.gates[i].support & circuit.gates[i - 1].support:
                return None
            return swap_adjacent(circuit, i - 1)
        if action.name == "replace_last":
            for i in range(len(circuit.gates) - 1, -1, -1):
                g = circuit.gates[i]
                if g.kind.n_qubits == 1 and g.qubits[0] == action.qubit:
                    if g.kind is GateKind.H:
                        return None
                    gs = circuit.gates
                    return Circuit(circuit.n_qubits,
                                   gs[:i] + (Gate(GateKind.H, (action.qubit,)),) + gs[i + 1:])
            return None
        if action.name == "cancel_pass":
            return cancel_pairs(circuit)
        if action.name == "inject":
            if self._budget_left(circuit) < 2:
                return None
            return self._inject(circuit, self._record)
        if action.name == "boost":
            bonds = self._below_threshold_bonds()
            if not bonds or self._budget_left(circuit) < len(bonds):
                return None
            out = circuit
            for k in bonds:
                out = out.cz(k - 1, k)
            return out
        raise EnvError(f"unknown action {action.name}")

    def valid_mask(self) -> np.ndarray:
        self._require_reset()
        return np.array([self.apply_action(self._circuit, a) is not None
                         for a in self.catalog], dtype=bool)

    def step(self, action_id: int):
        self._require_reset()
        if not 0 <= action_id < len(self.catalog):
            raise EnvError(f"action id {action_id} out of range [0, {len(self.catalog)})")
        action = self.catalog[action_id]
        edited = self.apply_action(self._circuit, action)
        injected = False
        if edited is None:
            reward = INVALID_PENALTY
        else:
            record = self._evaluate(edited)
            if (record.entropy_norm < self.threshold
                    and self._budget_left(edited) >= 2):
                # trigger targets the weakest bond of the just-edited circuit
                edited = self._inject(edited, record)
                record = self._evaluate(edited)
                injected = True
            value = metrics.reward(record.deltas_vs(self._baseline), self.cfg.weights)
            reward = value - self._prev_value
            self._prev_value = value
            self._circuit = edited
            self._record = record
        self._steps += 1
        done = self._steps >= self.cfg.max_steps_per_episode
        self._episode_entropies.append(self._record.entropy_norm)
        info = {
            "record": self._record,
            "mask": self.valid_mask(),
            "invalid": edited is None,
            "injected": injected,
            "objective": self._prev_value,
            "action": action,
        }
        return encode(self._circuit, self._record, self.cfg), reward, done, info

    def adjust_threshold(self) -> float:
        """Per-episode update: move 10% toward the episode's mean entropy,
        clamped into [0.5, 0.95]."""
        self._require_reset()
        mean_entropy = float(np.mean(self._episode_entropies))
        self.threshold = float(np.clip(0.9 * self.threshold + 0.1 * mean_entropy, 0.5, 0.95))
        return self.threshold
