"""Trajectory noise model: stochastic Pauli and reset insertions.

Three channels, all realized as discrete events sampled per shot:

* depolarizing after every gate: with probability p_1q (p_2q for two-qubit
  gates) one uniformly chosen non-identity Pauli lands on one uniformly
  chosen qubit of the gate;
* thermal relaxation, Pauli-twirled: once per circuit moment every qubit
  independently suffers a reset-to-|0> with p_amp = 1 - exp(-t/T1) and a
  Z flip with p_phase = 1 - exp(-t/T_phi), where 1/T_phi = 1/T2 - 1/(2*T1)
  and t is the longest gate duration in the moment (idle qubits relax for
  the same window);
* measurement error: every readout bit flips with probability p_meas.

The reset event is realized on pure states as a projective Z measurement
followed by a conditional X, a valid stochastic unraveling of the
amplitude-damping reset. All probabilities depend only on the parameters,
so a disabled model yields empty insertion lists and both pipelines share
one code path.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np

from .backend import BackendSpec
from .circuit import Circuit, moments

_PAULI_NAMES = ("x", "y", "z")


class NoiseConfigError(ValueError):
    """Inconsistent noise parameters (for example T2 > 2*T1)."""


@dataclass(frozen=True)
class NoiseParams:
    p_meas: float = 0.02
    p_1q: float = 0.01
    p_2q: float = 0.03
    t1_us: float = 50.0
    t2_us: float = 70.0
    dur_1q_us: float = 0.05
    dur_2q_us: float = 0.3
    enabled: bool = True
    during_training: bool = True

    def __post_init__(self):
        for name in ("p_meas", "p_1q", "p_2q"):
            p = getattr(self, name)
            if not 0.0 <= p <= 1.0:
                raise NoiseConfigError(f"{name}={p} outside [0, 1]")
        for name in ("t1_us", "t2_us", "dur_1q_us", "dur_2q_us"):
            v = getattr(self, name)
            if v <= 0.0:
                raise NoiseConfigError(f"{name}={v} must be positive")
        if self.t2_us > 2.0 * self.t1_us:
            raise NoiseConfigError(f"t2={self.t2_us} exceeds 2*t1={2.0 * self.t1_us}; "
                                   "pure dephasing time would be negative")

    def disabled(self) -> "NoiseParams":
        return replace(self, enabled=False)

    @property
    def t_phi_us(self) -> float:
        """Pure dephasing time from 1/T_phi = 1/T2 - 1/(2*T1); inf when
        T2 saturates the 2*T1 limit."""
        inv = 1.0 / self.t2_us - 1.0 / (2.0 * self.t1_us)
        return math.inf if inv <= 0.0 else 1.0 / inv


@dataclass(frozen=True)
class NoiseEvent:
    kind: str  # "x" | "y" | "z" | "reset"
    qubit: int


def depolarizing_insertions(kind_n_qubits: int, qubits: tuple[int, ...],
                            params: NoiseParams, rng: np.random.Generator) -> list[NoiseEvent]:
    """Post-gate depolarizing draw; at most one event per gate."""
    if not params.enabled:
        return []
    p = params.p_2q if kind_n_qubits == 2 else params.p_1q
    if rng.random() >= p:
        return []
    qubit = qubits[rng.integers(len(qubits))] if len(qubits) > 1 else qubits[0]
    pauli = _PAULI_NAMES[rng.integers(3)]
    return [NoiseEvent(pauli, int(qubit))]


def relaxation_insertions(qubits, duration_us: float, params: NoiseParams,
                          rng: np.random.Generator) -> list[NoiseEvent]:
    """Per-qubit reset/dephasing draws over one idle-or-busy window."""
    if not params.enabled:
        return []
    p_amp = 1.0 - math.exp(-duration_us / params.t1_us)
    t_phi = params.t_phi_us
    p_phase = 0.0 if math.isinf(t_phi) else 1.0 - math.exp(-duration_us / t_phi)
    events = []
    for q in qubits:
        if rng.random() < p_amp:
            events.append(NoiseEvent("reset", int(q)))
        if rng.random() < p_phase:
            events.append(NoiseEvent("z", int(q)))
    return events


def flip_measured_bits(bits: str, params: NoiseParams, rng: np.random.Generator) -> str:
    if not params.enabled or params.p_meas == 0.0:
        return bits
    flips = rng.random(len(bits)) < params.p_meas
    return "".join(("1" if b == "0" else "0") if f else b
                   for b, f in zip(bits, flips))


def _apply_event(state, event: NoiseEvent, rng: np.random.Generator) -> None:
    if event.kind == "reset":
        state.measure_reset0(event.qubit, rng)
    else:
        state.apply_pauli(event.kind, event.qubit)


def run_one_trajectory(circuit: Circuit, spec: BackendSpec, params: NoiseParams,
                       rng: np.random.Generator):
    """Simulate one noisy execution; returns the final (collapsed) state.
    Event order inside a moment: each gate then its depolarizing draw, then
    one relaxation pass over all qubits for the moment's duration."""
    state = spec.fresh(circuit.n_qubits)
    all_qubits = range(circuit.n_qubits)
    for layer in moments(circuit):
        duration = 0.0
        for idx in layer:
            gate = circuit.gates[idx]
            state.apply_gate(gate)
            for ev in depolarizing_insertions(gate.kind.n_qubits, gate.qubits, params, rng):
                _apply_event(state, ev, rng)
            duration = max(duration, params.dur_2q_us if gate.kind.n_qubits == 2
                           else params.dur_1q_us)
        for ev in relaxation_insertions(all_qubits, duration, params, rng):
            _apply_event(state, ev, rng)
    return state


def sample_counts(circuit: Circuit, spec: BackendSpec, shots: int, seed,
                  params: NoiseParams | None = None) -> dict[str, int]:
    """Measure the circuit `shots` times in the Z basis.

    With noise enabled every shot runs its own trajectory on a child RNG
    stream spawned from the seed, so results are reproducible and
    independent of execution order. Without noise the circuit is simulated
    once and the exact final distribution is sampled.
    """
    if shots < 1:
        raise ValueError("shots must be positive")
    root = seed if isinstance(seed, np.random.SeedSequence) else np.random.SeedSequence(seed)
    if params is None or not params.enabled:
        rng = np.random.default_rng(root)
        return spec.run(circuit).sample(shots, rng)
    counts: dict[str, int] = {}
    for child in root.spawn(shots):
        rng = np.random.default_rng(child)
        state = run_one_trajectory(circuit, spec, params, rng)
        bits = state.measure_once(rng)
        bits = flip_measured_bits(bits, params, rng)
        counts[bits] = counts.get(bits, 0) + 1
    return counts
