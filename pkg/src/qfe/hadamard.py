"""Modified Hadamard-test circuits for the McLachlan matrix elements.

Every test has one ancilla prepared in ``|+>``. Branch 0 runs the ansatz with
the Pauli of rotation ``left_k`` inserted; branch 1 runs it with ``right_k``
inserted and then ``right_tail`` (gates controlled on the ancilla). A phase
``phi`` on branch 1 and a final Hadamard give
``<Z_anc> = Re(exp(i*phi) <branch0|branch1>)``.
"""

import numpy as np

from qfe.qsim import Circuit, Gate, QuantumState, run_counted, z_expectation


def hadamard_test_circuit(spec, beta, num_qubits, ancilla, left_k=0, right_k=0,
                          right_tail=(), prep=(), phase=0.0, label=""):
    c = Circuit(num_qubits, label=label)
    c.extend(prep)
    c.add("H", ancilla)
    if phase:
        c.add("PHASE", ancilla, phase)
    for gate, k in spec.gates(beta):
        c.gates.append(gate)
        if k and k == left_k:
            c.add("X", ancilla)
            c.add(spec.axis(k), gate.target, controls=(ancilla,))
            c.add("X", ancilla)
        if k and k == right_k:
            c.add(spec.axis(k), gate.target, controls=(ancilla,))
    c.extend(right_tail)
    c.add("H", ancilla)
    return c


def run_test(circuit, ancilla, counter=None):
    """Execute one test circuit from ``|0...0>`` and return ``<Z_anc>``."""
    zero = QuantumState.zero(circuit.num_qubits)
    if counter is None:
        out = circuit.apply(zero)
    else:
        out = run_counted(circuit, zero, counter)
    return z_expectation(out, ancilla)


def weighted_real_part(weight, spec, beta, num_qubits, ancilla, counter=None, **kwargs):
    """``Re(weight * <branch0|branch1>)`` from a single test circuit.

    The phase of ``weight`` is applied on the ancilla, its modulus classically.
    """
    if weight == 0:
        return 0.0
    circuit = hadamard_test_circuit(spec, beta, num_qubits, ancilla,
                                    phase=float(np.angle(weight)), **kwargs)
    return abs(weight) * run_test(circuit, ancilla, counter)


def controlled(gates, control):
    """Add ``control`` to every gate in ``gates``."""
    return [Gate(g.kind, g.target, g.angle, (*g.controls, control)) for g in gates]
