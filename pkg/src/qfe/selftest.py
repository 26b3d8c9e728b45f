"""Numerical hygiene checks shared by the ``selftest`` verb and the test suite."""

from dataclasses import dataclass

import numpy as np

from qfe.ansatz import AnsatzSpec, AnsatzState, derivative_matrix, evaluate
from qfe.pauli import PauliString, all_strings, decompose, pauli_matrix, to_matrix
from qfe.ppo import VBlockLayout, v_block_circuit
from qfe.qsim import QuantumState
from qfe.spectral import build_grid, build_matrices, cardinal
from qfe.stochastic import (gauss_hermite, hermite_functions, hermite_orthonormal, kl_expand)


@dataclass(frozen=True)
class Check:
    name: str
    value: float
    tol: float

    @property
    def passed(self):
        return bool(self.value < self.tol)

    def line(self):
        status = "PASS" if self.passed else "FAIL"
        return f"{status}  {self.name}: {self.value:.3e} (< {self.tol:.0e})"


def pauli_roundtrip(seed=0, trials=5):
    rng = np.random.default_rng(seed)
    worst = 0.0
    for n in (1, 2, 3):
        for _ in range(trials):
            m = rng.normal(size=(2**n, 2**n)) + 1j * rng.normal(size=(2**n, 2**n))
            worst = max(worst, np.abs(to_matrix(decompose(m, 0.0)) - m).max())
    return worst


def d2_consistency(sizes=range(3, 17)):
    worst = 0.0
    for N in sizes:
        dm = build_matrices(N)
        sq = dm.D1 @ dm.D1
        worst = max(worst, np.abs(dm.D2 - sq).max() / np.abs(sq).max())
    return worst


def derivative_vs_fd(seed=0, h=1e-5):
    """Central differences of ``alpha U(beta)|0>`` against the analytic derivative rows."""
    rng = np.random.default_rng(seed)
    worst = 0.0
    for spec in (AnsatzSpec(2, 2), AnsatzSpec(3, 2, entangler="cz", axes="XYZXYZ")):
        theta = np.concatenate([[1.3], rng.uniform(-np.pi, np.pi, spec.M)])
        D = derivative_matrix(AnsatzState(spec, theta))
        for k in range(spec.M + 1):
            e = np.zeros_like(theta)
            e[k] = h
            plus = evaluate(AnsatzState(spec, theta + e)).amplitudes
            minus = evaluate(AnsatzState(spec, theta - e)).amplitudes
            worst = max(worst, np.abs((plus - minus) / (2 * h) - D[k]).max())
    return worst


def pauli_orthonormality(n=2):
    mats = [pauli_matrix(p) for p in all_strings(n)]
    gram = np.array([[np.trace(a.conj().T @ b) / 2**n for b in mats] for a in mats])
    return np.abs(gram - np.eye(len(mats))).max()


def chaos_orthonormality(order=10):
    rule = gauss_hermite(order + 2)
    h = hermite_orthonormal(order, rule.nodes[:, 0])
    return np.abs((h * rule.weights) @ h.T - np.eye(order)).max()


def hermite_function_orthonormality(K=20):
    # eta_k eta_m carries exp(-x^2), exactly the Gauss-Hermite weight.
    x, w = np.polynomial.hermite.hermgauss(K + 5)
    poly = hermite_functions(K, x) * np.exp(x**2 / 2)
    return np.abs((poly * w) @ poly.T - np.eye(K)).max()


def kl_orthonormality(K=20):
    kl = kl_expand(lambda x: 0.0 * x, lambda x, y: np.exp(-0.5 * (x - y) ** 2), K=K, L=5)
    return np.abs(kl.vectors.T @ kl.vectors - np.eye(K)).max()


def cardinal_delta(N=10):
    grid = build_grid(N)
    S = np.array([cardinal(grid, j, grid.points) for j in range(N + 1)])
    return np.abs(S - np.eye(N + 1)).max()


def v_block_branches(max_n=2):
    """Largest deviation of any ancilla branch from its Pauli string, phase included."""
    worst = 0.0
    for n in range(1, max_n + 1):
        layout = VBlockLayout.standard(n)
        circuit = v_block_circuit(layout)
        dim = 2**n
        for idx in range(4**n):
            P = pauli_matrix(PauliString.from_index(idx, n))
            for b in range(dim):
                out = circuit.apply(QuantumState.basis(3 * n, b + dim * idx)).amplitudes
                expected = np.zeros(2 ** (3 * n), dtype=complex)
                expected[dim * idx: dim * (idx + 1)] = P[:, b]
                worst = max(worst, np.abs(out - expected).max())
    return worst


def run_all():
    return [
        Check("pauli roundtrip", pauli_roundtrip(), 1e-11),
        Check("D2 vs D1^2 (relative)", d2_consistency(), 1e-8),
        Check("ansatz derivative vs finite differences", derivative_vs_fd(), 1e-8),
        Check("pauli trace orthonormality", pauli_orthonormality(), 1e-10),
        Check("hermite chaos orthonormality", chaos_orthonormality(), 1e-10),
        Check("hermite function orthonormality", hermite_function_orthonormality(), 1e-10),
        Check("KL eigenvector orthonormality", kl_orthonormality(), 1e-10),
        Check("cardinal functions at nodes", cardinal_delta(), 1e-10),
        Check("V-block branch exactness", v_block_branches(), 1e-14),
    ]
