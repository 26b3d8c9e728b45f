"""McLachlan variational simulation of ``d|psi>/dt = H|psi>``.

The trial state is ``alpha * U(beta)|0>`` with ``theta = (alpha, beta)``.
Each step assembles ``A_ik = Re<d_k psi|d_i psi>`` and
``C_k = Re<d_k psi|H|psi>``, solves ``A theta_dot = C`` and advances theta.

Two evaluation modes share one code path. ``exact`` takes inner products of
simulated statevectors directly. ``circuit`` builds one modified Hadamard test
per matrix element and counts every execution: ``(M+1)**2`` circuits for A,
plus ``P*(M+1)`` for C under the ``original`` strategy (one per Pauli term) or
at most ``4*(M+1)`` under the ``parallel`` strategy (one V-block circuit per
non-empty split part).
"""

import logging
from dataclasses import dataclass, field
from functools import cached_property

import numpy as np

from qfe.ansatz import (AnsatzState, derivative_matrix, derivative_prefactor, evaluate,
                        fit_initial)
from qfe.hadamard import controlled, weighted_real_part
from qfe.pauli import (DROP_TOL, PART_PHASES, PauliDecomposition, SplitHamiltonian, decompose,
                       split, to_matrix)
from qfe.ppo import parallel_C_term
from qfe.qsim import ExecutionCounter, Gate

log = logging.getLogger(__name__)

MODES = ("exact", "circuit")
STRATEGIES = ("original", "parallel")
INTEGRATORS = ("euler", "rk4")


class SolverError(RuntimeError):
    def __init__(self, message, step=None):
        super().__init__(message)
        self.step = step


@dataclass
class Hamiltonian:
    """A generator in the three forms the assembly needs."""

    matrix: np.ndarray
    decomposition: PauliDecomposition
    split: SplitHamiltonian

    @property
    def n(self):
        return self.decomposition.n

    @property
    def num_terms(self):
        return len(self.decomposition.terms)

    @cached_property
    def original_operator(self):
        """``sum_i gamma_i sigma_i`` rebuilt from the Pauli terms."""
        return to_matrix(self.decomposition)

    @cached_property
    def parallel_operator(self):
        """``g1 H1 - g2 H2 + i g3 H3 - i g4 H4`` rebuilt from the split parts."""
        return to_matrix(self.split)


def prepare_hamiltonian(h, drop_tol=DROP_TOL):
    if isinstance(h, Hamiltonian):
        return h
    if isinstance(h, SplitHamiltonian):
        matrix = to_matrix(h)
        return Hamiltonian(matrix, decompose(matrix, drop_tol), h)
    if isinstance(h, PauliDecomposition):
        return Hamiltonian(to_matrix(h), h, split(h))
    matrix = np.asarray(h, dtype=complex)
    d = decompose(matrix, drop_tol)
    return Hamiltonian(matrix, d, split(d))


@dataclass
class VqsProblem:
    hamiltonian: object
    initial_coefficients: np.ndarray
    t_final: float
    dt: float = 1e-3
    mode: str = "exact"
    strategy: str = "parallel"
    integrator: str = "euler"
    regularization: float = 1e-8
    pauli_drop_tol: float = DROP_TOL

    def __post_init__(self):
        self.hamiltonian = prepare_hamiltonian(self.hamiltonian, self.pauli_drop_tol)
        self.initial_coefficients = np.asarray(self.initial_coefficients, dtype=complex)
        if self.initial_coefficients.shape != (2**self.hamiltonian.n,):
            raise ValueError("initial coefficients do not match the Hamiltonian dimension")
        if self.dt <= 0:
            raise ValueError("dt must be positive")
        if self.t_final < 0:
            raise ValueError("t_final must be non-negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}")
        if self.strategy not in STRATEGIES:
            raise ValueError(f"strategy must be one of {STRATEGIES}")
        if self.integrator not in INTEGRATORS:
            raise ValueError(f"integrator must be one of {INTEGRATORS}")


@dataclass
class Trajectory:
    times: np.ndarray
    theta_history: np.ndarray
    state_history: np.ndarray = None
    residuals: np.ndarray = None
    circuits_per_step: list = field(default_factory=list)
    counter: ExecutionCounter = None


def assemble_A(state, mode="exact", counter=None, derivatives=None):
    M = state.spec.M
    if mode == "exact":
        D = derivative_matrix(state) if derivatives is None else derivatives
        return np.real(D.conj() @ D.T)
    n = state.spec.n
    A = np.empty((M + 1, M + 1))
    for k in range(M + 1):
        for i in range(M + 1):
            weight = np.conj(derivative_prefactor(state, k)) * derivative_prefactor(state, i)
            A[i, k] = weighted_real_part(weight, state.spec, state.beta, n + 1, n, counter,
                                         left_k=k, right_k=i, label="A")
    return A


def assemble_C(state, h, strategy="parallel", mode="exact", counter=None, derivatives=None):
    h = prepare_hamiltonian(h)
    M = state.spec.M
    C = np.zeros(M + 1)
    if h.num_terms == 0:
        return C
    if mode == "exact":
        D = derivative_matrix(state) if derivatives is None else derivatives
        op = h.original_operator if strategy == "original" else h.parallel_operator
        psi = state.alpha * D[0]
        return np.real(D.conj() @ (op @ psi))
    n = state.spec.n
    for k in range(M + 1):
        if strategy == "parallel":
            C[k] = sum(parallel_C_term(state, part, k, cls, counter=counter)
                       for cls, part in enumerate(h.split.parts))
            continue
        left = np.conj(derivative_prefactor(state, k)) * state.alpha
        for p, gamma in h.decomposition.terms:
            tail = controlled(_pauli_gates(p), n)
            C[k] += weighted_real_part(gamma * left, state.spec, state.beta, n + 1, n, counter,
                                       left_k=k, right_tail=tail, label="C-original")
    return C


def _pauli_gates(pauli):
    n = pauli.n
    return [Gate(ch, n - 1 - pos) for pos, ch in enumerate(pauli.letters) if ch != "I"]


def solve_step(A, C, regularization=1e-8, refinements=1):
    """Ridge solution of ``A theta_dot = C``; returns ``(theta_dot, residual)``.

    The first solve is ``(A^T A + lambda I)^-1 A^T C``. Each refinement re-solves
    for the remaining residual (iterated Tikhonov), which removes the ridge bias
    in well-determined directions while keeping near-null directions damped.
    """
    A = np.asarray(A, dtype=float)
    C = np.asarray(C, dtype=float)
    if not (np.all(np.isfinite(A)) and np.all(np.isfinite(C))):
        raise SolverError("non-finite entries in the McLachlan system")
    if A.shape != (C.size, C.size):
        raise ValueError(f"A has shape {A.shape}, C has length {C.size}")
    lhs = A.T @ A + regularization * np.eye(C.size)
    theta_dot = np.linalg.solve(lhs, A.T @ C)
    for _ in range(refinements):
        theta_dot = theta_dot + np.linalg.solve(lhs, A.T @ (C - A @ theta_dot))
    residual = float(np.linalg.norm(A @ theta_dot - C))
    return theta_dot, residual


def theta_derivative(state, h, mode="exact", strategy="parallel", regularization=1e-8,
                     counter=None):
    D = derivative_matrix(state) if mode == "exact" else None
    A = assemble_A(state, mode, counter, D)
    C = assemble_C(state, h, strategy, mode, counter, D)
    return solve_step(A, C, regularization)


def mclachlan_distance(state, h, theta_dot):
    """``|| sum_i theta_dot_i d_i psi - H psi ||``, the variational defect."""
    h = prepare_hamiltonian(h)
    D = derivative_matrix(state)
    psi = evaluate(state).amplitudes
    return float(np.linalg.norm(theta_dot @ D - h.matrix @ psi))


def initial_state(problem, spec, fit_tol=1e-10, **fit_kwargs):
    u0 = problem.initial_coefficients
    norm = float(np.linalg.norm(u0))
    if norm == 0:
        raise ValueError("initial coefficients are zero")
    return fit_initial(spec, u0 / norm, norm=norm, tol=fit_tol, **fit_kwargs)


def evolve(problem, spec, initial=None, record_states=False, fit_tol=1e-10,
           counter=None, **fit_kwargs):
    """Integrate ``theta(t)`` over ``[0, t_final]`` and return a :class:`Trajectory`.

    ``initial`` may be a pre-fitted :class:`AnsatzState`; otherwise the ansatz
    is fitted to the normalized initial coefficients.
    """
    h = problem.hamiltonian
    if spec.n != h.n:
        raise ValueError(f"ansatz has {spec.n} qubits, Hamiltonian needs {h.n}")
    state = initial if initial is not None else initial_state(problem, spec, fit_tol, **fit_kwargs)
    counter = counter if counter is not None else ExecutionCounter()
    steps = int(round(problem.t_final / problem.dt))
    if not np.isclose(steps * problem.dt, problem.t_final, rtol=0, atol=1e-12):
        raise ValueError("t_final must be an integer multiple of dt")
    times = problem.dt * np.arange(steps + 1)
    thetas = np.empty((steps + 1, spec.M + 1))
    thetas[0] = state.theta
    residuals = np.zeros(steps)
    states = np.empty((steps + 1, 2**spec.n), dtype=complex) if record_states else None
    if record_states:
        states[0] = evaluate(state).amplitudes
    per_step = []

    def rate(theta):
        st = AnsatzState(spec, theta)
        return theta_derivative(st, h, problem.mode, problem.strategy,
                                problem.regularization, counter)

    theta = state.theta.copy()
    dt = problem.dt
    for step in range(steps):
        before = counter.circuits_executed
        k1, res = rate(theta)
        if problem.integrator == "euler":
            update = k1
        else:
            k2, _ = rate(theta + 0.5 * dt * k1)
            k3, _ = rate(theta + 0.5 * dt * k2)
            k4, _ = rate(theta + dt * k3)
            update = (k1 + 2 * k2 + 2 * k3 + k4) / 6
        if not np.all(np.isfinite(update)):
            raise SolverError(f"non-finite theta derivative at step {step}", step)
        theta = theta + dt * update
        if theta[0] <= 0:
            raise SolverError(f"normalization factor became non-positive at step {step}", step)
        thetas[step + 1] = theta
        residuals[step] = res
        per_step.append(counter.circuits_executed - before)
        if record_states:
            states[step + 1] = evaluate(AnsatzState(spec, theta)).amplitudes
    return Trajectory(times, thetas, states, residuals, per_step, counter)


def decode(trajectory, spec):
    """Amplitude vectors ``alpha * U(beta)|0>`` for every recorded theta."""
    if trajectory.state_history is not None:
        return trajectory.state_history
    return np.array([evaluate(AnsatzState(spec, th)).amplitudes
                     for th in trajectory.theta_history])


def circuit_count(M, P, strategy, parts=4):
    """Circuits per time step: ``(M+1)^2 + P(M+1)`` or ``(M+1)^2 + parts*(M+1)``."""
    if strategy == "original":
        return (M + 1) ** 2 + P * (M + 1)
    return (M + 1) ** 2 + parts * (M + 1)
