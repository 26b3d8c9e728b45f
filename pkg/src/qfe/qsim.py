"""Noise-free statevector simulator.

Qubit 0 is the least significant bit of the amplitude index. Gates act in
place on a reshaped view of the amplitude array; no full unitaries are built.
"""

import json
import threading
from collections import Counter
from dataclasses import dataclass, field

import numpy as np

from qfe.pauli import as_pauli, pauli_action

GATE_KINDS = ("X", "Y", "Z", "H", "RX", "RY", "RZ", "PHASE")

_FIXED = {
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
    "H": np.array([[1, 1], [1, -1]], dtype=complex) / np.sqrt(2),
}


class QubitIndexError(IndexError):
    def __init__(self, qubit, num_qubits):
        super().__init__(f"qubit {qubit} out of range for a {num_qubits}-qubit register")
        self.qubit = qubit
        self.num_qubits = num_qubits


@dataclass
class QuantumState:
    num_qubits: int
    amplitudes: np.ndarray

    def __post_init__(self):
        if self.num_qubits < 1:
            raise ValueError("num_qubits must be >= 1")
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.num_qubits,):
            raise ValueError(
                f"expected {2**self.num_qubits} amplitudes, got shape {self.amplitudes.shape}"
            )

    @classmethod
    def zero(cls, num_qubits):
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[0] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def basis(cls, num_qubits, index):
        amps = np.zeros(2**num_qubits, dtype=complex)
        amps[index] = 1.0
        return cls(num_qubits, amps)

    @classmethod
    def from_vector(cls, vector):
        vector = np.asarray(vector, dtype=complex)
        n = vector.size.bit_length() - 1
        if vector.ndim != 1 or vector.size < 2 or 2**n != vector.size:
            raise ValueError(f"vector length {vector.size} is not a power of two >= 2")
        return cls(n, vector.copy())

    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    def is_normalized(self, tol=1e-12):
        return abs(np.vdot(self.amplitudes, self.amplitudes).real - 1.0) < tol

    def copy(self):
        return QuantumState(self.num_qubits, self.amplitudes.copy())

    def __mul__(self, scalar):
        return QuantumState(self.num_qubits, self.amplitudes * scalar)

    __rmul__ = __mul__


@dataclass(frozen=True)
class Gate:
    kind: str
    target: int
    angle: float = 0.0
    controls: tuple = ()

    def __post_init__(self):
        if self.kind not in GATE_KINDS:
            raise ValueError(f"unknown gate kind {self.kind!r}")
        object.__setattr__(self, "controls", tuple(self.controls))
        if self.target in self.controls or len(set(self.controls)) != len(self.controls):
            raise ValueError(f"control and target qubits overlap in {self}")

    def matrix(self):
        if self.kind in _FIXED:
            return _FIXED[self.kind]
        c, s = np.cos(self.angle / 2), np.sin(self.angle / 2)
        if self.kind == "RX":
            return np.array([[c, -1j * s], [-1j * s, c]])
        if self.kind == "RY":
            return np.array([[c, -s], [s, c]], dtype=complex)
        if self.kind == "RZ":
            return np.array([[np.exp(-0.5j * self.angle), 0], [0, np.exp(0.5j * self.angle)]])
        return np.array([[1, 0], [0, np.exp(1j * self.angle)]])

    def qubits(self):
        return (self.target, *self.controls)


def apply_gate_inplace(amps, num_qubits, gate):
    """Apply ``gate`` to ``amps`` in place.

    ``amps`` may carry leading batch axes; the last axis holds ``2**num_qubits``
    amplitudes.
    """
    for q in gate.qubits():
        if not 0 <= q < num_qubits:
            raise QubitIndexError(q, num_qubits)
    psi = amps.reshape(amps.shape[:-1] + (2,) * num_qubits)
    # Axis 0 after the batch axes is the most significant qubit.
    idx0 = [slice(None)] * num_qubits
    for c in gate.controls:
        idx0[num_qubits - 1 - c] = 1
    idx1 = list(idx0)
    axis = num_qubits - 1 - gate.target
    idx0[axis], idx1[axis] = 0, 1
    idx0, idx1 = (Ellipsis, *idx0), (Ellipsis, *idx1)
    m = gate.matrix()
    if gate.kind in ("Z", "RZ", "PHASE"):
        if m[0, 0] != 1:
            psi[idx0] *= m[0, 0]
        psi[idx1] *= m[1, 1]
        return
    a0 = psi[idx0].copy()
    a1 = psi[idx1]
    psi[idx0] = m[0, 0] * a0 + m[0, 1] * a1
    psi[idx1] = m[1, 0] * a0 + m[1, 1] * a1


def apply_gate(state, gate):
    out = state.copy()
    apply_gate_inplace(out.amplitudes, out.num_qubits, gate)
    return out


def apply_pauli_string(state, pauli):
    pauli = as_pauli(pauli)
    if pauli.n != state.num_qubits:
        raise ValueError(
            f"Pauli string {pauli} has length {pauli.n}, state has {state.num_qubits} qubits"
        )
    target, phase = pauli_action(pauli)
    out = np.empty_like(state.amplitudes)
    out[target] = phase * state.amplitudes
    return QuantumState(state.num_qubits, out)


def inner_product(a, b):
    """Return ``<a|b>``."""
    if a.num_qubits != b.num_qubits:
        raise ValueError(f"qubit count mismatch: {a.num_qubits} vs {b.num_qubits}")
    return complex(np.vdot(a.amplitudes, b.amplitudes))


@dataclass
class Circuit:
    num_qubits: int
    gates: list = field(default_factory=list)
    label: str = ""

    def add(self, kind, target, angle=0.0, controls=()):
        gate = Gate(kind, target, angle, controls)
        for q in gate.qubits():
            if not 0 <= q < self.num_qubits:
                raise QubitIndexError(q, self.num_qubits)
        self.gates.append(gate)
        return self

    def extend(self, gates):
        for g in gates:
            self.add(g.kind, g.target, g.angle, g.controls)
        return self

    def __len__(self):
        return len(self.gates)

    def apply(self, state):
        if state.num_qubits != self.num_qubits:
            raise ValueError(
                f"circuit has {self.num_qubits} qubits, state has {state.num_qubits}"
            )
        out = state.copy()
        for gate in self.gates:
            apply_gate_inplace(out.amplitudes, out.num_qubits, gate)
        return out

    def unitary(self):
        """Dense unitary, column by column. Test helper for small circuits."""
        dim = 2**self.num_qubits
        cols = [self.apply(QuantumState.basis(self.num_qubits, i)).amplitudes for i in range(dim)]
        return np.array(cols).T


class ExecutionCounter:
    """Thread-safe tally of executed circuits, grouped by circuit label."""

    def __init__(self):
        self._lock = threading.Lock()
        self._by_label = Counter()

    def increment(self, label=""):
        with self._lock:
            self._by_label[label] += 1

    @property
    def circuits_executed(self):
        with self._lock:
            return sum(self._by_label.values())

    def by_label(self):
        with self._lock:
            return dict(self._by_label)

    def reset(self):
        with self._lock:
            self._by_label.clear()

    def to_json(self):
        return json.dumps(self.by_label(), sort_keys=True)


def run_counted(circuit, state, counter):
    out = circuit.apply(state)
    counter.increment(circuit.label)
    return out


def z_expectation(state, qubit):
    """Exact ``<Z>`` on one qubit, read from the amplitudes."""
    probs = np.abs(state.amplitudes) ** 2
    bits = (np.arange(probs.size) >> qubit) & 1
    return float(probs[bits == 0].sum() - probs[bits == 1].sum())
