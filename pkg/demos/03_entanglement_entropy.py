"""Schmidt spectra, bond entropies and the normalized aggregate.

Run:  python3 demos/03_entanglement_entropy.py
"""

import numpy as np

from qsopt import mps, statevector
from qsopt.circuit import Circuit, ghz, random_circuit
from qsopt.metrics import bell_unit_entropies, entropy_norm, normalized_entropy

print("=== ghz: one bit of entanglement across every cut ===")
state = statevector.run(ghz(6))
for bond in range(1, 6):
    vals = state.schmidt_values(bond)
    print(f"  cut {bond}|{6-bond}: schmidt {np.round(vals[:2], 4)}, "
          f"entropy {state.bond_entropy(bond):.6f} bits")
print(f"normalized aggregate: {entropy_norm(state):.4f}")
# the aggregate divides each bond by its maximum min(k, n-k) bits,
# so the middle cuts of a ghz state count as half full

print()
print("=== product states carry exactly zero ===")
product = statevector.run(Circuit(4).h(0).rx(1, 0.4).rz(3, 2.0))
print("bond entropies:", product.bond_entropies())

print()
print("=== volume-law random circuit saturates the caps ===")
rng = np.random.default_rng(3)
deep = statevector.run(random_circuit(8, 160, rng))
entropies = deep.bond_entropies()
print("bond entropies:", [f"{s:.3f}" for s in entropies])
print(f"normalized aggregate: {normalized_entropy(entropies, 8):.4f}")
print("bell units (clamped to 1 bit):",
      [f"{s:.3f}" for s in bell_unit_entropies(entropies)])

print()
print("=== a capped mps measures entropy against log2(chi) ===")
s = mps.run(random_circuit(8, 160, np.random.default_rng(3)), chi_max=4)
print(f"chi_max=4: aggregate {entropy_norm(s):.4f} "
      f"(caps at min(k, n-k, log2 chi) = 2 bits)")
