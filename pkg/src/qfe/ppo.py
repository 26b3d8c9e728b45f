"""Parallel Pauli operations.

A V block acts on one target qubit with an ancilla pair ``(z, x)``:
controlled-X from ``x``, controlled-Z from ``z``, then a controlled phase of
``-pi/2`` across the pair. The pair basis states ``|x z> = 00, 01, 10, 11``
select ``I, Z, X, Y`` on the target (``Z X = iY``, and the phase removes the
``i``). Applying one block per target qubit with a coefficient register
prepared as ``sum_i sqrt(c_i)|i>`` realizes ``sum_i c_i sigma_i`` on the
interfering branch of a Hadamard test, in a single circuit.
"""

from dataclasses import dataclass

import numpy as np

from qfe.ansatz import derivative_prefactor
from qfe.hadamard import controlled, weighted_real_part
from qfe.pauli import PART_PHASES
from qfe.qsim import Circuit, Gate, QuantumState

PHASE_CLASSES = ("real+", "real-", "imag+", "imag-")
V_PHASE = -np.pi / 2


@dataclass(frozen=True)
class VBlockLayout:
    """Targets and ancilla pairs; ``pairs[j] = (z_control, x_control)`` for ``targets[j]``."""

    targets: tuple
    pairs: tuple

    def __post_init__(self):
        object.__setattr__(self, "targets", tuple(self.targets))
        object.__setattr__(self, "pairs", tuple(tuple(p) for p in self.pairs))
        if len(self.pairs) != len(self.targets) or any(len(p) != 2 for p in self.pairs):
            raise ValueError("need one (z, x) ancilla pair per target")
        used = list(self.targets) + [q for p in self.pairs for q in p]
        if len(set(used)) != len(used):
            raise ValueError(f"overlapping qubit indices in layout {used}")
        if min(used) < 0:
            raise ValueError("qubit indices must be non-negative")

    @classmethod
    def standard(cls, n, offset=None):
        """Targets ``0..n-1``; ancillas from ``offset`` (default ``n``), z-bit first.

        With this layout the ancilla register value equals the Pauli string index.
        """
        offset = n if offset is None else offset
        return cls(tuple(range(n)), tuple((offset + 2 * j, offset + 2 * j + 1) for j in range(n)))

    @property
    def n(self):
        return len(self.targets)

    @property
    def ancillas(self):
        return tuple(q for p in self.pairs for q in p)

    @property
    def num_qubits(self):
        return max((*self.targets, *self.ancillas)) + 1


def v_block_gates(layout, extra_controls=()):
    gates = []
    extra = tuple(extra_controls)
    for target, (z_anc, x_anc) in zip(layout.targets, layout.pairs):
        gates.append(Gate("X", target, controls=(x_anc, *extra)))
        gates.append(Gate("Z", target, controls=(z_anc, *extra)))
        gates.append(Gate("PHASE", z_anc, V_PHASE, controls=(x_anc, *extra)))
    return gates


def v_block_circuit(layout, num_qubits=None):
    """``V`` applied to every target, as a circuit on ``num_qubits`` qubits."""
    c = Circuit(num_qubits or layout.num_qubits, label="v-block")
    return c.extend(v_block_gates(layout))


def amplitude_encode(target, tol=1e-10):
    """Binary-tree state preparation circuit with ``C|0...0> = target``.

    Level ``l`` rotates qubit ``n-1-l`` with ``RY`` controlled on the ``l``
    more significant qubits (one rotation per prefix). Real targets are signed
    at the leaves; complex targets get a diagonal of multi-controlled phases.
    """
    target = np.asarray(target, dtype=complex)
    n = target.size.bit_length() - 1
    if target.ndim != 1 or target.size < 2 or 2**n != target.size:
        raise ValueError(f"target length {target.size} is not a power of two >= 2")
    if abs(np.vdot(target, target).real - 1.0) > tol:
        raise ValueError("target vector must be L2-normalized")
    is_real = np.allclose(target.imag, 0.0, atol=1e-15)
    mags = target.real if is_real else np.abs(target)

    circuit = Circuit(n, label="state-prep")
    for level in range(n):
        q = n - 1 - level
        width = 2 ** (n - level)
        for prefix in range(2**level):
            block = mags[prefix * width:(prefix + 1) * width]
            left, right = block[: width // 2], block[width // 2:]
            if level == n - 1:
                a0, a1 = left[0], right[0]
                if not is_real:
                    a0, a1 = abs(a0), abs(a1)
            else:
                a0, a1 = np.linalg.norm(left), np.linalg.norm(right)
            angle = 2 * np.arctan2(a1, a0)
            if abs(angle) < 1e-15:
                continue
            _controlled_on_prefix(circuit, "RY", q, angle, prefix, level, n)

    if not is_real:
        phases = np.angle(target)
        for b in range(2**n):
            if abs(target[b]) > 1e-15 and abs(phases[b]) > 1e-15:
                _controlled_on_prefix(circuit, "PHASE", 0, phases[b], b >> 1, n - 1, n,
                                      target_bit=b & 1)
    return circuit


def _controlled_on_prefix(circuit, kind, target, angle, prefix, level, n, target_bit=1):
    # Controls are the `level` most significant qubits; prefix bits of 0 need X flips.
    controls = tuple(range(n - 1, n - 1 - level, -1))
    flips = [q for i, q in enumerate(controls) if not (prefix >> (level - 1 - i)) & 1]
    if not target_bit:
        flips.append(target)
    for q in flips:
        circuit.add("X", q)
    circuit.add(kind, target, angle, controls)
    for q in flips:
        circuit.add("X", q)


def _check_coefficients(c, tol=1e-10):
    c = np.asarray(c, dtype=float)
    if np.any(c < 0):
        raise ValueError("coefficients must be non-negative")
    if abs(c.sum() - 1.0) > tol:
        raise ValueError(f"coefficients must sum to 1, got {c.sum()!r}")
    return c


def coefficient_register_gates(c, offset):
    """Gates preparing ``sum_i sqrt(c_i)|i>`` on qubits ``offset..``."""
    prep = amplitude_encode(np.sqrt(_check_coefficients(c)))
    return [Gate(g.kind, g.target + offset, g.angle, tuple(q + offset for q in g.controls))
            for g in prep.gates]


def prepare_coefficient_state(c):
    c = _check_coefficients(c)
    circuit = amplitude_encode(np.sqrt(c))
    return circuit.apply(QuantumState.zero(circuit.num_qubits))


def parallel_C_term(state, part, k, phase_class, counter=None):
    """Contribution of one split part to ``C_k``, from one V-block test circuit.

    Returns ``Re(s * g * <d_k psi| sum_i c_i sigma_i |psi>)`` with ``s`` the part's
    phase (+1, -1, +i, -i). An empty part returns 0 without running anything.
    """
    if isinstance(phase_class, str):
        phase_class = PHASE_CLASSES.index(phase_class)
    if part.empty or part.scale == 0:
        return 0.0
    spec = state.spec
    n = spec.n
    layout = VBlockLayout.standard(n)
    test_anc = 3 * n
    weight = (PART_PHASES[phase_class] * part.scale
              * np.conj(derivative_prefactor(state, k)) * state.alpha)
    prep = coefficient_register_gates(part.coefficient_vector(n), offset=n)
    tail = controlled(v_block_gates(layout), test_anc)
    return weighted_real_part(weight, spec, state.beta, 3 * n + 1, test_anc, counter,
                              left_k=k, right_tail=tail, prep=prep,
                              label=f"C-parallel[{PHASE_CLASSES[phase_class]}]")
