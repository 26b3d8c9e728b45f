"""Parameterized trial states ``alpha * U(beta)|0...0>`` and their derivatives."""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import minimize

from qfe.qsim import Circuit, Gate, QuantumState, apply_gate_inplace

ENTANGLERS = ("cx", "cz", "none")
_ROTATION = {"X": "RX", "Y": "RY", "Z": "RZ"}


class FitError(RuntimeError):
    def __init__(self, message, best_infidelity):
        super().__init__(message)
        self.best_infidelity = best_infidelity


@dataclass(frozen=True)
class AnsatzSpec:
    """``layers`` blocks of per-qubit rotations followed by an entangling chain.

    Parameter ``k`` (1-based, ``k = layer*n + qubit + 1``) drives exactly one
    rotation. ``axes`` gives each rotation's Pauli axis; ``None`` means RY
    everywhere, which keeps all amplitudes real.
    """

    n: int
    layers: int = 1
    entangler: str = "cx"
    axes: tuple = None

    def __post_init__(self):
        if self.n < 1 or self.layers < 1:
            raise ValueError("need n >= 1 and layers >= 1")
        if self.entangler not in ENTANGLERS:
            raise ValueError(f"entangler must be one of {ENTANGLERS}")
        if self.axes is not None:
            axes = tuple(self.axes)
            if len(axes) != self.M or any(a not in _ROTATION for a in axes):
                raise ValueError(f"axes must be {self.M} letters from X/Y/Z")
            object.__setattr__(self, "axes", axes)

    @property
    def M(self):
        return self.n * self.layers

    def axis(self, k):
        """Pauli axis of parameter ``k`` (1-based)."""
        return "Y" if self.axes is None else self.axes[k - 1]

    def gates(self, beta):
        """Yield ``(gate, k)``; ``k`` is the parameter index, 0 for fixed gates."""
        beta = np.asarray(beta, dtype=float)
        if beta.shape != (self.M,):
            raise ValueError(f"expected {self.M} rotation angles, got {beta.shape}")
        k = 0
        for _ in range(self.layers):
            for q in range(self.n):
                k += 1
                yield Gate(_ROTATION[self.axis(k)], q, float(beta[k - 1])), k
            if self.entangler != "none":
                kind = "X" if self.entangler == "cx" else "Z"
                for q in range(self.n - 1):
                    yield Gate(kind, q + 1, controls=(q,)), 0

    def circuit(self, beta, label="ansatz"):
        c = Circuit(self.n, label=label)
        for gate, _ in self.gates(beta):
            c.gates.append(gate)
        return c


@dataclass
class AnsatzState:
    spec: AnsatzSpec
    theta: np.ndarray

    def __post_init__(self):
        self.theta = np.asarray(self.theta, dtype=float)
        if self.theta.shape != (self.spec.M + 1,):
            raise ValueError(f"theta must have length M+1 = {self.spec.M + 1}")

    @property
    def alpha(self):
        return float(self.theta[0])

    @property
    def beta(self):
        return self.theta[1:]


def _base_amplitudes(spec, beta):
    amps = np.zeros(2**spec.n, dtype=complex)
    amps[0] = 1.0
    for gate, _ in spec.gates(beta):
        apply_gate_inplace(amps, spec.n, gate)
    return amps


def evaluate(state):
    """Unnormalized state ``alpha * U(beta)|0>``."""
    if state.alpha <= 0:
        raise ValueError(f"normalization factor must be positive, got {state.alpha}")
    return QuantumState(state.spec.n, state.alpha * _base_amplitudes(state.spec, state.beta))


def derivative_prefactor(state, k):
    """Scalar multiplying the Pauli-inserted circuit in ``d psi / d theta_k``."""
    return 1.0 if k == 0 else -0.5j * state.alpha


def inserted_amplitudes(spec, beta, k):
    """``U_k|0>``: the ansatz with the axis Pauli of rotation ``k`` inserted after it.

    ``k = 0`` gives the plain circuit.
    """
    amps = np.zeros(2**spec.n, dtype=complex)
    amps[0] = 1.0
    for gate, kk in spec.gates(beta):
        apply_gate_inplace(amps, spec.n, gate)
        if k and kk == k:
            apply_gate_inplace(amps, spec.n, Gate(spec.axis(k), gate.target))
    return amps


def all_inserted_amplitudes(spec, beta):
    """Rows ``U_k|0>`` for ``k = 0..M``, pushed through the circuit as one batch."""
    n = spec.n
    rows = np.zeros((spec.M + 1, 2**n), dtype=complex)
    rows[:, 0] = 1.0
    for gate, k in spec.gates(beta):
        apply_gate_inplace(rows, n, gate)
        if k:
            apply_gate_inplace(rows[k], n, Gate(spec.axis(k), gate.target))
    return rows


def derivative_state(state, k):
    """``d|psi(theta)>/d theta_k`` as an unnormalized state."""
    if not 0 <= k <= state.spec.M:
        raise IndexError(f"parameter index {k} outside 0..{state.spec.M}")
    amps = inserted_amplitudes(state.spec, state.beta, k)
    return QuantumState(state.spec.n, derivative_prefactor(state, k) * amps)


def derivative_matrix(state):
    """All derivative states as rows of an ``(M+1, 2**n)`` array."""
    rows = all_inserted_amplitudes(state.spec, state.beta)
    rows[1:] *= -0.5j * state.alpha
    return rows


def fit_initial(spec, target, norm=1.0, tol=1e-10, restarts=50, maxiter=500, seed=0):
    """Find ``beta`` with ``1 - |<U(beta)0|target>|^2 <= tol``; ``alpha = norm``.

    Starts from ``beta = 0`` and then random restarts. Raises :class:`FitError`
    carrying the best infidelity if no restart reaches ``tol``.
    """
    if isinstance(target, QuantumState):
        target = target.amplitudes
    target = np.asarray(target, dtype=complex)
    if target.shape != (2**spec.n,):
        raise ValueError(f"target must have {2**spec.n} amplitudes")
    if abs(np.vdot(target, target).real - 1.0) > 1e-10:
        raise ValueError("target state must be normalized")
    if norm <= 0:
        raise ValueError("norm must be positive")

    def infidelity(beta):
        ov = np.vdot(target, _base_amplitudes(spec, beta))
        return 1.0 - abs(ov) ** 2

    def objective(beta):
        rows = all_inserted_amplitudes(spec, beta)
        ov = np.vdot(target, rows[0])
        d_ov = -0.5j * (rows[1:] @ target.conj())
        grad = -2.0 * np.real(np.conj(ov) * d_ov)
        return 1.0 - abs(ov) ** 2, grad

    rng = np.random.default_rng(seed)
    best_beta, best = np.zeros(spec.M), infidelity(np.zeros(spec.M))
    for attempt in range(restarts + 1):
        if best <= tol:
            break
        x0 = np.zeros(spec.M) if attempt == 0 else rng.uniform(-np.pi, np.pi, spec.M)
        res = minimize(objective, x0, jac=True, method="BFGS",
                       options={"maxiter": maxiter, "gtol": 1e-12})
        val = infidelity(res.x)
        if val < best:
            best, best_beta = val, res.x
    if best > tol:
        raise FitError(f"ansatz fit stalled at infidelity {best:.3e} > {tol:.1e}", best)

    beta = _match_phase(spec, best_beta, target)
    return AnsatzState(spec, np.concatenate([[norm], beta]))


def _match_phase(spec, beta, target):
    # Any Pauli rotation obeys R(b + 2pi) = -R(b), which fixes a sign flip.
    beta = np.array(beta, dtype=float)
    ov = np.vdot(target, _base_amplitudes(spec, beta))
    if ov.real < 0:
        beta[0] += 2 * np.pi
        ov = -ov
    if abs(ov.imag) > 1e-6:
        res = minimize(lambda b: 1.0 - np.vdot(target, _base_amplitudes(spec, b)).real,
                       beta, method="BFGS", options={"gtol": 1e-12})
        beta = res.x
        ov = np.vdot(target, _base_amplitudes(spec, beta))
        if abs(ov.imag) > 1e-6:
            raise FitError("ansatz cannot match the target's global phase", 1.0 - ov.real)
    return beta
