"""Dense statevector backend, the exact reference for every other engine.

Keeps all 2^n amplitudes; qubit 0 is the most significant bit, so the
amplitude of bitstring b is amps[int(b, 2)]. Hard capacity cap because
memory doubles per qubit (the cap may be raised explicitly).
"""

from __future__ import annotations

import numpy as np

from . import gates as G
from .circuit import Circuit, Gate, GateKind

DEFAULT_MAX_QUBITS = 14
ENTROPY_FLOOR = 1e-12


class CapacityError(Exception):
    """Requested statevector exceeds the configured qubit cap."""


def _matrix_1q(gate: Gate) -> np.ndarray:
    if gate.kind is GateKind.H:
        return G.H
    if gate.kind is GateKind.RX:
        return G.rx(gate.angle)
    if gate.kind is GateKind.RZ:
        return G.rz(gate.angle)
    raise ValueError(f"not a single-qubit gate: {gate.kind}")


class DenseState:
    """Mutable dense state; gate application edits amplitudes in place."""

    def __init__(self, n_qubits: int, max_qubits: int = DEFAULT_MAX_QUBITS):
        if n_qubits > max_qubits:
            raise CapacityError(f"{n_qubits} qubits exceeds the dense cap of {max_qubits}")
        self.n_qubits = n_qubits
        self.amps = np.zeros(2 ** n_qubits, dtype=complex)
        self.amps[0] = 1.0

    def _axes(self) -> np.ndarray:
        return self.amps.reshape([2] * self.n_qubits)

    def apply_unitary_1q(self, matrix: np.ndarray, qubit: int) -> None:
        v = self._axes()
        i0 = tuple(0 if a == qubit else slice(None) for a in range(self.n_qubits))
        i1 = tuple(1 if a == qubit else slice(None) for a in range(self.n_qubits))
        a0, a1 = v[i0].copy(), v[i1]
        v[i0] = matrix[0, 0] * a0 + matrix[0, 1] * a1
        v[i1] = matrix[1, 0] * a0 + matrix[1, 1] * a1

    def apply_unitary_2q(self, matrix: np.ndarray, qa: int, qb: int) -> None:
        v = self._axes()

        def panel(ba, bb):
            return tuple(ba if a == qa else bb if a == qb else slice(None)
                         for a in range(self.n_qubits))

        blocks = [v[panel(b >> 1, b & 1)].copy() for b in range(4)]
        for r in range(4):
            v[panel(r >> 1, r & 1)] = sum(matrix[r, c] * blocks[c] for c in range(4))

    def apply_gate(self, gate: Gate) -> None:
        if gate.kind.n_qubits == 1:
            self.apply_unitary_1q(_matrix_1q(gate), gate.qubits[0])
        elif gate.kind is GateKind.CX:
            self.apply_unitary_2q(G.CX, *gate.qubits)
        elif gate.kind is GateKind.CZ:
            self.apply_unitary_2q(G.CZ, *gate.qubits)
        else:
            self.apply_unitary_2q(G.SWAP, *gate.qubits)

    def apply_pauli(self, name: str, qubit: int) -> None:
        self.apply_unitary_1q(G.PAULIS[name], qubit)

    def run(self, circuit: Circuit) -> "DenseState":
        for g in circuit.gates:
            self.apply_gate(g)
        return self

    # --- readout ---------------------------------------------------------

    def norm(self) -> float:
        return float(np.sqrt(np.sum(np.abs(self.amps) ** 2)))

    def amplitude(self, bitstring: str) -> complex:
        if len(bitstring) != self.n_qubits or set(bitstring) - {"0", "1"}:
            raise ValueError(f"bad bitstring {bitstring!r} for {self.n_qubits} qubits")
        return complex(self.amps[int(bitstring, 2)])

    def probabilities(self) -> np.ndarray:
        return np.abs(self.amps) ** 2

    def distribution(self) -> dict[str, float]:
        """Exact outcome distribution; omits zero-probability bitstrings."""
        probs = self.probabilities()
        width = self.n_qubits
        return {format(i, f"0{width}b"): float(p)
                for i, p in enumerate(probs) if p > 0.0}

    def sample(self, shots: int, rng: np.random.Generator) -> dict[str, int]:
        probs = self.probabilities()
        probs = probs / probs.sum()
        draws = rng.choice(len(probs), size=shots, p=probs)
        width = self.n_qubits
        idx, counts = np.unique(draws, return_counts=True)
        return {format(int(i), f"0{width}b"): int(c) for i, c in zip(idx, counts)}

    def measure_once(self, rng: np.random.Generator) -> str:
        probs = self.probabilities()
        i = int(rng.choice(len(probs), p=probs / probs.sum()))
        return format(i, f"0{self.n_qubits}b")

    def measure_reset0(self, qubit: int, rng: np.random.Generator) -> int:
        """Projective Z measurement followed by a flip back to |0> if the
        outcome was 1. Collapses the state; returns the measured bit."""
        v = self._axes()
        i1 = tuple(1 if a == qubit else slice(None) for a in range(self.n_qubits))
        i0 = tuple(0 if a == qubit else slice(None) for a in range(self.n_qubits))
        p1 = float(np.sum(np.abs(v[i1]) ** 2))
        outcome = 1 if rng.random() < p1 else 0
        if outcome == 1:
            v[i0] = v[i1] / np.sqrt(p1)
            v[i1] = 0.0
        else:
            v[i0] = v[i0] / np.sqrt(1.0 - p1)
            v[i1] = 0.0
        return outcome

    def schmidt_values(self, bond: int) -> np.ndarray:
        """Singular values across the cut [0, bond) | [bond, n)."""
        if not 1 <= bond <= self.n_qubits - 1:
            raise ValueError(f"bond {bond} out of range [1, {self.n_qubits - 1}]")
        m = self.amps.reshape(2 ** bond, 2 ** (self.n_qubits - bond))
        return np.linalg.svd(m, compute_uv=False)

    def bond_entropy(self, bond: int) -> float:
        lam2 = self.schmidt_values(bond) ** 2
        lam2 = lam2[lam2 > ENTROPY_FLOOR]
        lam2 = lam2 / lam2.sum()  # renormalize so a pure spectrum gives exactly 0
        return float(-np.sum(lam2 * np.log2(lam2)) + 0.0)

    def bond_entropies(self) -> list[float]:
        return [self.bond_entropy(b) for b in range(1, self.n_qubits)]


def run(circuit: Circuit, max_qubits: int = DEFAULT_MAX_QUBITS) -> DenseState:
    return DenseState(circuit.n_qubits, max_qubits=max_qubits).run(circuit)
