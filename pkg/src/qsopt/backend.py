"""Backend selection shared by the metrics, environment and CLI layers."""

from __future__ import annotations

from dataclasses import dataclass

from . import mps, statevector
from .circuit import Circuit

BACKENDS = ("mps", "statevector")


@dataclass(frozen=True)
class BackendSpec:
    kind: str = "mps"
    chi_max: int = 64
    trunc_tol: float = 1e-10
    dense_cap: int = statevector.DEFAULT_MAX_QUBITS

    def __post_init__(self):
        if self.kind not in BACKENDS:
            raise ValueError(f"unknown backend {self.kind!r}; expected one of {BACKENDS}")

    def fresh(self, n_qubits: int):
        if self.kind == "mps":
            return mps.MpsState(n_qubits, chi_max=self.chi_max, trunc_tol=self.trunc_tol)
        return statevector.DenseState(n_qubits, max_qubits=self.dense_cap)

    def run(self, circuit: Circuit):
        return self.fresh(circuit.n_qubits).run(circuit)
