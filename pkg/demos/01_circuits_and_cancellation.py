"""Circuit IR tour: building, scheduling, text format, cancellation.

Run:  python3 demos/01_circuits_and_cancellation.py
"""

import math

from qsopt.circuit import (
    Circuit, cancel_pairs, composition, depth, emit, gate_count, ghz, moments,
    parse,
)

print("=== building circuits ===")
c = Circuit(4).h(0).cx(0, 1).rx(2, math.pi / 4).cz(2, 3).swap(1, 2)
print(emit(c))

print("moments (ASAP schedule):")
for m, layer in enumerate(moments(c)):
    names = [f"{c.gates[i].kind.value}{c.gates[i].qubits}" for i in layer]
    print(f"  t={m}: {', '.join(names)}")
print(f"depth {depth(c)}, gates {gate_count(c)}")

comp = composition(c)
print("composition:", {k.value: f"{f:.2f}" for k, f in comp.fractions.items() if f})

print()
print("=== the text format round-trips ===")
assert parse(emit(c)) == c
print("parse(emit(c)) == c")

print()
print("=== cancellation pass ===")
# h h cancels, rx rx merges, and the merge exposes nothing further
messy = (Circuit(3)
         .h(0).h(0)                  # adjacent self-inverse pair
         .rx(1, 0.3).rx(1, 0.4)      # same-axis rotations merge
         .cx(1, 2).cx(1, 2)          # two-qubit pair cancels too
         .cz(0, 2))
print("before:", gate_count(messy), "gates")
clean = cancel_pairs(messy)
print("after: ", gate_count(clean), "gates")
print(emit(clean))

# a gate in between on the same qubit blocks the pair
blocked = Circuit(2).h(0).cx(0, 1).h(0)
print("blocked pair survives:", gate_count(cancel_pairs(blocked)), "gates")

print()
print("=== ghz ladder ===")
print(emit(ghz(5)), end="")
