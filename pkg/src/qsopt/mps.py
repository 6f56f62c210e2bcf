"""Matrix product state circuit engine with bond-capped SVD truncation.

State is a chain of rank-3 tensors A[k] with axes (left bond, physical,
right bond) and outer bonds of dimension 1. A mixed-canonical form is
maintained around an orthogonality center: tensors left of the center are
left-isometries, tensors right of it right-isometries, so Schmidt spectra,
sampling probabilities and the norm read off locally.

Two-qubit gates on non-adjacent qubits are routed with temporary SWAP
layers and the qubit order is restored afterwards. Each two-site update
runs an SVD, keeps at most chi_max singular values, drops the smallest
ones while their total squared weight stays within trunc_tol, and
renormalizes the rest.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import gates as G
from .circuit import Circuit, Gate, GateKind
from .statevector import ENTROPY_FLOOR

COMPLEX_BYTES = 16


@dataclass(frozen=True)
class SchmidtSpectrum:
    bond: int
    values: np.ndarray  # singular values, descending, squares sum to ~1


@dataclass(frozen=True)
class PeakStats:
    max_bond: int
    memory_bytes: int


def _matrix_2q(kind: GateKind) -> np.ndarray:
    if kind is GateKind.CX:
        return G.CX
    if kind is GateKind.CZ:
        return G.CZ
    if kind is GateKind.SWAP:
        return G.SWAP
    raise ValueError(f"not a two-qubit gate: {kind}")


class MpsState:
    def __init__(self, n_qubits: int, chi_max: int = 64, trunc_tol: float = 1e-10):
        if n_qubits < 1:
            raise ValueError("need at least one qubit")
        if chi_max < 1:
            raise ValueError("chi_max must be positive")
        if trunc_tol < 0.0:
            raise ValueError("trunc_tol must be nonnegative")
        self.n_qubits = n_qubits
        self.chi_max = chi_max
        self.trunc_tol = trunc_tol
        self.tensors = []
        for _ in range(n_qubits):
            t = np.zeros((1, 2, 1), dtype=complex)
            t[0, 0, 0] = 1.0
            self.tensors.append(t)
        self.center = 0
        self.max_bond_seen = 1
        self.last_discarded = 0.0
        self.total_discarded = 0.0

    # --- canonical form ---------------------------------------------------

    def _shift_right(self) -> None:
        c = self.center
        a = self.tensors[c]
        l, p, r = a.shape
        q, rmat = np.linalg.qr(a.reshape(l * p, r))
        k = q.shape[1]
        self.tensors[c] = q.reshape(l, p, k)
        self.tensors[c + 1] = np.einsum("kb,bpr->kpr", rmat, self.tensors[c + 1])
        self.center = c + 1

    def _shift_left(self) -> None:
        c = self.center
        a = self.tensors[c]
        l, p, r = a.shape
        # LQ via QR of the conjugate transpose: rows of q_rows are orthonormal
        q, rmat = np.linalg.qr(a.reshape(l, p * r).conj().T)
        k = q.shape[1]
        q_rows = q.conj().T
        lmat = rmat.conj().T
        self.tensors[c] = q_rows.reshape(k, p, r)
        self.tensors[c - 1] = np.einsum("lpb,bk->lpk", self.tensors[c - 1], lmat)
        self.center = c - 1

    def move_center(self, site: int) -> None:
        while self.center < site:
            self._shift_right()
        while self.center > site:
            self._shift_left()

    # --- gate application -------------------------------------------------

    def apply_unitary_1q(self, matrix: np.ndarray, qubit: int) -> None:
        self.tensors[qubit] = np.einsum("ab,lbr->lar", matrix, self.tensors[qubit])

    def apply_pauli(self, name: str, qubit: int) -> None:
        self.apply_unitary_1q(G.PAULIS[name], qubit)

    def _apply_2q_adjacent(self, matrix: np.ndarray, left: int) -> None:
        """Apply a 4x4 unitary to sites (left, left+1); matrix indexes the
        left site as its most significant bit."""
        self.move_center(left)
        a, b = self.tensors[left], self.tensors[left + 1]
        l = a.shape[0]
        r = b.shape[2]
        theta = np.einsum("lpm,mqr->lpqr", a, b)
        u4 = matrix.reshape(2, 2, 2, 2)
        theta = np.einsum("acbd,lbdr->lacr", u4, theta)
        m = theta.reshape(l * 2, 2 * r)
        u, s, vh = np.linalg.svd(m, full_matrices=False)
        k = self._truncation_rank(s)
        weight = float(np.sum(s ** 2))
        kept = s[:k]
        self.last_discarded = float(np.sum(s[k:] ** 2)) / weight
        self.total_discarded += self.last_discarded
        kept = kept / np.sqrt(np.sum(kept ** 2))
        self.tensors[left] = u[:, :k].reshape(l, 2, k)
        self.tensors[left + 1] = (kept[:, None] * vh[:k, :]).reshape(k, 2, r)
        self.center = left + 1
        if k > self.max_bond_seen:
            self.max_bond_seen = k

    def _truncation_rank(self, s: np.ndarray) -> int:
        k = min(len(s), self.chi_max)
        if self.trunc_tol > 0.0:
            weight = np.sum(s ** 2)
            tail = np.cumsum((s ** 2)[::-1])[::-1]  # tail[i] = sum of s[i:]^2
            while k > 1 and tail[k - 1] <= self.trunc_tol * weight:
                k -= 1
        return max(k, 1)

    def apply_unitary_2q(self, matrix: np.ndarray, qa: int, qb: int) -> None:
        lo, hi = min(qa, qb), max(qa, qb)
        # route the upper qubit next to the lower one with SWAP updates
        for j in range(hi, lo + 1, -1):
            self._apply_2q_adjacent(G.SWAP, j - 1)
        oriented = matrix if qa < qb else G.SWAP @ matrix @ G.SWAP
        self._apply_2q_adjacent(oriented, lo)
        for j in range(lo + 1, hi):
            self._apply_2q_adjacent(G.SWAP, j)

    def apply_gate(self, gate: Gate) -> None:
        if gate.kind.n_qubits == 1:
            if gate.kind is GateKind.H:
                mat = G.H
            elif gate.kind is GateKind.RX:
                mat = G.rx(gate.angle)
            else:
                mat = G.rz(gate.angle)
            self.apply_unitary_1q(mat, gate.qubits[0])
        else:
            self.apply_unitary_2q(_matrix_2q(gate.kind), *gate.qubits)

    def run(self, circuit: Circuit) -> "MpsState":
        for g in circuit.gates:
            self.apply_gate(g)
        return self

    # --- readout ----------------------------------------------------------

    def norm(self) -> float:
        c = self.tensors[self.center]
        return float(np.sqrt(np.sum(np.abs(c) ** 2)))

    def amplitude(self, bitstring: str) -> complex:
        if len(bitstring) != self.n_qubits or set(bitstring) - {"0", "1"}:
            raise ValueError(f"bad bitstring {bitstring!r} for {self.n_qubits} qubits")
        v = np.ones(1, dtype=complex)
        for site, ch in enumerate(bitstring):
            v = v @ self.tensors[site][:, int(ch), :]
        return complex(v[0])

    def schmidt(self, bond: int) -> SchmidtSpectrum:
        """Schmidt spectrum across [0, bond) | [bond, n); bond in [1, n-1]."""
        if not 1 <= bond <= self.n_qubits - 1:
            raise ValueError(f"bond {bond} out of range [1, {self.n_qubits - 1}]")
        self.move_center(bond - 1)
        a = self.tensors[bond - 1]
        l, p, r = a.shape
        s = np.linalg.svd(a.reshape(l * p, r), compute_uv=False)
        return SchmidtSpectrum(bond, s[s > 0.0])

    def bond_entropy(self, bond: int) -> float:
        lam2 = self.schmidt(bond).values ** 2
        lam2 = lam2[lam2 > ENTROPY_FLOOR]
        lam2 = lam2 / lam2.sum()  # renormalize so a pure spectrum gives exactly 0
        return float(-np.sum(lam2 * np.log2(lam2)) + 0.0)

    def bond_entropies(self) -> list[float]:
        return [self.bond_entropy(b) for b in range(1, self.n_qubits)]

    def bond_dims(self) -> list[int]:
        return [t.shape[2] for t in self.tensors[:-1]]

    def peak_stats(self) -> PeakStats:
        mem = sum(t.size for t in self.tensors) * COMPLEX_BYTES
        return PeakStats(self.max_bond_seen, mem)

    # --- measurement ------------------------------------------------------

    def sample(self, shots: int, rng: np.random.Generator) -> dict[str, int]:
        """Draw shots bitstrings by conditional sampling along the chain.
        Vectorized over shots: a batch of boundary vectors is advanced site
        by site, conditioning on each drawn bit."""
        self.move_center(0)
        vec = np.ones((shots, 1), dtype=complex)
        bits = np.empty((shots, self.n_qubits), dtype=np.uint8)
        for site in range(self.n_qubits):
            a = self.tensors[site]
            m0 = vec @ a[:, 0, :]
            m1 = vec @ a[:, 1, :]
            p0 = np.sum(np.abs(m0) ** 2, axis=1)
            p1 = np.sum(np.abs(m1) ** 2, axis=1)
            pr1 = p1 / (p0 + p1)
            chose1 = rng.random(shots) < pr1
            bits[:, site] = chose1
            vec = np.where(chose1[:, None], m1, m0)
            norm = np.sqrt(np.where(chose1, p1, p0))
            vec = vec / norm[:, None]
        packed, counts = np.unique(bits, axis=0, return_counts=True)
        return {"".join(str(b) for b in row): int(c) for row, c in zip(packed, counts)}

    def measure_once(self, rng: np.random.Generator) -> str:
        return next(iter(self.sample(1, rng)))

    def measure_reset0(self, qubit: int, rng: np.random.Generator) -> int:
        """Projective Z measurement at qubit, then flip back to |0> if 1."""
        self.move_center(qubit)
        a = self.tensors[qubit]
        p1 = float(np.sum(np.abs(a[:, 1, :]) ** 2))
        outcome = 1 if rng.random() < p1 else 0
        b = np.zeros_like(a)
        if outcome == 1:
            b[:, 0, :] = a[:, 1, :] / np.sqrt(p1)
        else:
            b[:, 0, :] = a[:, 0, :] / np.sqrt(1.0 - p1)
        self.tensors[qubit] = b
        return outcome

    def to_dense(self) -> np.ndarray:
        """Contract to the full 2^n amplitude vector (small n only)."""
        v = self.tensors[0]
        for t in self.tensors[1:]:
            v = np.einsum("...a,apb->...pb", v, t)
        return v.reshape(-1)


def run(circuit: Circuit, chi_max: int = 64, trunc_tol: float = 1e-10) -> MpsState:
    return MpsState(circuit.n_qubits, chi_max=chi_max, trunc_tol=trunc_tol).run(circuit)
