"""Quantum sensor circuit optimization: a DDQN agent editing gate-level
circuits, scored by QFI and entanglement entropy from MPS or statevector
simulation.

Submodules are imported explicitly (`from qsopt import circuit`, ...);
the package root stays import-light so the CLI can apply QSOPT_THREADS
before numpy loads.
"""

__version__ = "0.1.0"
