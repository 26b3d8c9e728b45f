import numpy as np
import pytest

from qfe.ansatz import AnsatzSpec, AnsatzState, derivative_matrix
from qfe.pauli import PauliString, decompose, pauli_matrix, split
from qfe.ppo import (VBlockLayout, amplitude_encode, coefficient_register_gates, parallel_C_term,
                     prepare_coefficient_state, v_block_circuit)
from qfe.problems import DENSE_A
from qfe.qsim import Circuit, ExecutionCounter, QuantumState
from qfe.selftest import v_block_branches
from qfe.vqs import assemble_C


def branch(n_anc_value, q):
    # one target qubit 0, ancillas z=1, x=2; ancilla value 2*x + z
    circuit = v_block_circuit(VBlockLayout.standard(1))
    return circuit.apply(QuantumState.basis(3, q + 2 * n_anc_value)).amplitudes


def test_branch_examples():
    # |x z> = 00 -> identity
    assert np.allclose(branch(0, 1), QuantumState.basis(3, 1).amplitudes)
    # z set -> Z: |1> picks up -1
    assert np.allclose(branch(1, 1), -QuantumState.basis(3, 1 + 2).amplitudes)
    # both set -> Y: |0> -> i|1>
    out = branch(3, 0)
    expected = np.zeros(8, complex)
    expected[1 + 6] = 1j
    assert np.abs(out - expected).max() < 1e-15


def test_branch_exactness_exhaustive():
    assert v_block_branches(2) < 1e-14


def test_superposition_linearity():
    rng = np.random.default_rng(2)
    n = 2
    c = rng.random(16)
    c /= c.sum()
    psi = rng.normal(size=4) + 1j * rng.normal(size=4)
    psi /= np.linalg.norm(psi)
    anc = prepare_coefficient_state(c).amplitudes
    full = np.kron(anc, psi)  # ancillas are the high qubits
    out = v_block_circuit(VBlockLayout.standard(n)).apply(QuantumState(3 * n, full)).amplitudes
    for i in range(16):
        block = out[4 * i: 4 * i + 4]
        expected = np.sqrt(c[i]) * pauli_matrix(PauliString.from_index(i, n)) @ psi
        assert np.abs(block - expected).max() < 1e-13


def test_layout_validation():
    with pytest.raises(ValueError):
        VBlockLayout((0,), ((0, 1),))
    with pytest.raises(ValueError):
        VBlockLayout((0, 1), ((2, 3),))
    lay = VBlockLayout.standard(2)
    assert lay.ancillas == (2, 3, 4, 5) and lay.num_qubits == 6


def test_coefficient_state_examples():
    assert np.allclose(prepare_coefficient_state([1, 0, 0, 0]).amplitudes, [1, 0, 0, 0])
    assert np.allclose(prepare_coefficient_state([0.5, 0.5, 0, 0]).amplitudes,
                       [np.sqrt(0.5), np.sqrt(0.5), 0, 0])
    part = split(decompose(DENSE_A)).parts[0]
    c = part.coefficient_vector(2)
    assert np.abs(prepare_coefficient_state(c).amplitudes - np.sqrt(c)).max() < 1e-12


def test_coefficient_state_errors():
    with pytest.raises(ValueError):
        prepare_coefficient_state([1.2, -0.2, 0, 0])
    with pytest.raises(ValueError):
        prepare_coefficient_state([0.5, 0.4, 0, 0])


def test_encode_examples():
    assert len(amplitude_encode([1, 0])) == 0
    c = amplitude_encode(np.array([1, 1]) / np.sqrt(2))
    assert [(g.kind, g.angle) for g in c.gates] == [("RY", pytest.approx(np.pi / 2))]
    with pytest.raises(ValueError):
        amplitude_encode([1, 1])
    with pytest.raises(ValueError):
        amplitude_encode(np.ones(3) / np.sqrt(3))


@pytest.mark.parametrize("complex_", [False, True])
@pytest.mark.parametrize("n", [1, 2, 3, 4])
def test_encode_fidelity(n, complex_):
    rng = np.random.default_rng(n)
    for _ in range(10):
        t = rng.normal(size=2**n) + (1j * rng.normal(size=2**n) if complex_ else 0)
        t /= np.linalg.norm(t)
        circuit = amplitude_encode(t)
        out = circuit.apply(QuantumState.zero(n)).amplitudes
        assert abs(np.vdot(t, out)) >= 1 - 1e-10
        assert np.abs(out - t).max() < 1e-12  # sign and phase are exact too
        assert len(circuit) <= 6 * 2**n * n


def test_encode_sparse_target():
    t = np.zeros(8)
    t[5] = -1
    out = amplitude_encode(t).apply(QuantumState.zero(3)).amplitudes
    assert np.allclose(out, t)


def test_register_gates_offset():
    gates = coefficient_register_gates([0, 1, 0, 0], offset=3)
    out = Circuit(5).extend(gates).apply(QuantumState.zero(5)).amplitudes
    assert abs(out[1 << 3]) == pytest.approx(1.0)


def test_single_z_part():
    s = split(decompose(np.diag([1.0, -1.0])))
    st = AnsatzState(AnsatzSpec(1, 1), [1.0, 0.0])
    assert parallel_C_term(st, s.parts[0], 0, "real+") == pytest.approx(1.0)


def test_empty_part_runs_nothing():
    s = split(decompose(np.diag([1.0, -1.0])))
    st = AnsatzState(AnsatzSpec(1, 1), [1.0, 0.3])
    counter = ExecutionCounter()
    assert parallel_C_term(st, s.parts[3], 1, 3, counter) == 0.0
    assert counter.circuits_executed == 0


def test_parts_sum_to_dense_C():
    rng = np.random.default_rng(4)
    spec = AnsatzSpec(2, 2)
    st = AnsatzState(spec, np.r_[1.4, rng.uniform(-np.pi, np.pi, spec.M)])
    sp = split(decompose(DENSE_A))
    D = derivative_matrix(st)
    dense = np.real(D.conj() @ (DENSE_A @ (st.alpha * D[0])))
    counter = ExecutionCounter()
    got = [sum(parallel_C_term(st, part, k, cls, counter) for cls, part in enumerate(sp.parts))
           for k in range(spec.M + 1)]
    assert np.abs(np.array(got) - dense).max() < 1e-10
    assert counter.circuits_executed <= 4 * (spec.M + 1)


def test_one_hot_part_matches_original_term():
    from qfe.pauli import HamiltonianPart, PauliDecomposition
    rng = np.random.default_rng(6)
    spec = AnsatzSpec(2, 1)
    st = AnsatzState(spec, np.r_[0.9, rng.uniform(-np.pi, np.pi, spec.M)])
    p = PauliString("XY")
    part = HamiltonianPart(1.0, [(p, 1.0)])
    for k in range(spec.M + 1):
        single = assemble_C(st, PauliDecomposition(2, [(p, 1.0)]), "original", "circuit")[k]
        assert abs(parallel_C_term(st, part, k, 0) - single) < 1e-13


def test_count_bound_independent_of_terms():
    rng = np.random.default_rng(8)
    spec = AnsatzSpec(3, 1)
    st = AnsatzState(spec, np.r_[1.0, rng.uniform(-1, 1, spec.M)])
    h = rng.normal(size=(8, 8)) + 1j * rng.normal(size=(8, 8))  # all 64 strings
    counter = ExecutionCounter()
    assemble_C(st, h, "parallel", "circuit", counter)
    assert counter.circuits_executed == 4 * (spec.M + 1)
