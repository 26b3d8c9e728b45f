"""Benchmark problems, their reference solutions and the classical ODE oracle."""

import json
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import expm

from qfe.ansatz import AnsatzSpec, AnsatzState, evaluate
from qfe.spectral import build_matrices, interior_restrict
from qfe.stochastic import gauss_hermite, galerkin_hamiltonian, kl_expand
from qfe.vqs import VqsProblem, evolve, initial_state

DENSE_A = np.array([
    [-0.1, 0.4, 0.2, -0.7],
    [0.9, 0.1, -0.1, -1.1],
    [0.5, 0.2, -0.4, -0.5],
    [0.6, 0.5, 0.3, -1.6],
])

SODE_A_MEAN = -1.8
SODE_A_STD = 1.0
HEAT_ALPHA = 0.3
HEAT_GRID_N = 9  # 10 collocation points, 8 interior


def heat_mean_field(x):
    return 2.7 - 0.1 * np.sin(np.pi * x)


def heat_covariance(x, y):
    return np.exp(-0.5 * (x - y) ** 2)


@dataclass
class ReferenceSolution:
    fn: object  # t -> array
    provenance: str  # "analytic" or "classical-integration"

    def __call__(self, t):
        return self.fn(t)


@dataclass
class ProblemInstance:
    name: str
    hamiltonian: np.ndarray
    initial: np.ndarray
    readout: str  # "coefficients", "pce-moments" or "collocation"
    reference: ReferenceSolution = None
    layers: int = 1  # default ansatz depth
    pauli_drop_tol: float = 1e-14
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.hamiltonian = np.asarray(self.hamiltonian)
        self.initial = np.asarray(self.initial)
        dim = self.initial.size
        if self.hamiltonian.shape != (dim, dim):
            raise ValueError("Hamiltonian does not match the initial vector")
        if not np.linalg.norm(self.initial) > 0:
            raise ValueError("initial vector must be non-zero")

    @property
    def n(self):
        return self.initial.size.bit_length() - 1

    def ansatz(self, layers=None):
        return AnsatzSpec(self.n, layers or self.layers)

    def classical(self, t):
        return classical_integrate(self.hamiltonian, self.initial, t)

    def to_json(self):
        def encode(a):
            a = np.asarray(a)
            if np.iscomplexobj(a) and np.any(a.imag):
                return {"real": a.real.tolist(), "imag": a.imag.tolist()}
            return a.real.tolist()

        return json.dumps({
            "name": self.name,
            "hamiltonian": encode(self.hamiltonian),
            "initial": encode(self.initial),
            "readout": self.readout,
            "layers": self.layers,
            "pauli_drop_tol": self.pauli_drop_tol,
            "metadata": self.metadata,
        }, sort_keys=True)

    @classmethod
    def from_json(cls, text):
        d = json.loads(text)

        def decode(v):
            if isinstance(v, dict):
                return np.asarray(v["real"]) + 1j * np.asarray(v["imag"])
            return np.asarray(v, dtype=float)

        inst = cls(d["name"], decode(d["hamiltonian"]), decode(d["initial"]), d["readout"],
                   layers=d["layers"], pauli_drop_tol=d["pauli_drop_tol"],
                   metadata=d["metadata"])
        inst.reference = ReferenceSolution(inst.classical, "classical-integration")
        return inst


def classical_integrate(H, u0, t):
    """``expm(H t) u0``; ``t`` may be a scalar or an array of times (rows out)."""
    H = np.asarray(H)
    u0 = np.asarray(u0)
    if not (np.all(np.isfinite(H)) and np.all(np.isfinite(u0))):
        raise ValueError("non-finite input")
    if np.ndim(t) == 0:
        return expm(H * t) @ u0
    return np.array([expm(H * ti) @ u0 for ti in np.asarray(t)])


def build_dense_ode():
    u0 = np.array([1.0, 0.0, 0.0, 0.0])
    inst = ProblemInstance("dense-ode", DENSE_A.copy(), u0, "coefficients", layers=2,
                           # every one of the 4^n strings is a circuit in the original scheme
                           pauli_drop_tol=0.0)
    inst.reference = ReferenceSolution(inst.classical, "analytic")
    return inst


def sode_mean(t, u0=1.0):
    t = np.asarray(t, dtype=float)
    return u0 * np.exp(-1.8 * t + t**2 / 2)


def sode_variance(t, u0=1.0):
    t = np.asarray(t, dtype=float)
    return u0**2 * np.exp(-3.6 * t + t**2) * (np.exp(t**2) - 1)


def build_stochastic_ode(N=8):
    """Galerkin system of ``du/dt = a u`` with ``a ~ N(-1.8, 1)`` and ``u(0) = 1``."""
    if N < 2:
        raise ValueError("need N >= 2")
    if N & (N - 1):
        raise ValueError("N must be a power of two to fill the register")
    H = galerkin_hamiltonian([SODE_A_MEAN, SODE_A_STD], N)
    u0 = np.zeros(N)
    u0[0] = 1.0
    inst = ProblemInstance(f"stochastic-ode-{N}", H, u0, "pce-moments",
                           layers=2 if N <= 4 else 4, metadata={"N": N})
    inst.reference = ReferenceSolution(
        lambda t: np.stack([sode_mean(t), sode_variance(t)], axis=-1), "analytic")
    return inst


def build_heat(N=HEAT_GRID_N, alpha=HEAT_ALPHA):
    dm = build_matrices(N)
    x = dm.grid.interior
    H = alpha * interior_restrict(dm.D2)
    inst = ProblemInstance("heat", H, np.sin(np.pi * x), "collocation", layers=4,
                           metadata={"N": N, "alpha": alpha, "x": x.tolist()})
    inst.reference = ReferenceSolution(
        lambda t: np.multiply.outer(np.exp(-alpha * np.pi**2 * np.asarray(t)), np.sin(np.pi * x)),
        "analytic")
    return inst


def heat_generator(dm, gamma):
    """Interior block of ``diag(D1 gamma) D1 + diag(gamma) D2``."""
    full = np.diag(dm.D1 @ gamma) @ dm.D1 + np.diag(gamma) @ dm.D2
    return interior_restrict(full)


@dataclass
class StochasticHeat:
    instances: list
    weights: np.ndarray
    nodes: np.ndarray
    kl: object
    x: np.ndarray

    def recombine(self, solutions):
        """Mean and variance fields from per-node solutions (axis 0 = node)."""
        return recombine_moments(self.weights, solutions)

    def classical(self, t):
        return self.recombine([inst.classical(t) for inst in self.instances])


def recombine_moments(weights, solutions):
    sol = np.asarray(solutions)
    w = np.asarray(weights)
    mean = np.tensordot(w, sol, axes=(0, 0))
    var = np.tensordot(w, sol**2, axes=(0, 0)) - mean**2
    return mean, var


def build_stochastic_heat(L=3, quad_nodes=3, K=20, N=HEAT_GRID_N, kl_quad_nodes=40):
    """One deterministic heat problem per tensor Gauss-Hermite node of the KL variables."""
    dm = build_matrices(N)
    x_all = dm.grid.points
    kl = kl_expand(heat_mean_field, heat_covariance, K=K, L=L, quad_nodes=kl_quad_nodes)
    rule = gauss_hermite(quad_nodes, kl.L)
    u0 = np.sin(np.pi * dm.grid.interior)
    instances = []
    for j, xi in enumerate(rule.nodes):
        gamma = kl.realize(x_all, xi)
        inst = ProblemInstance(f"stochastic-heat[{j}]", heat_generator(dm, gamma), u0,
                               "collocation", layers=4,
                               metadata={"node": xi.tolist(), "N": N})
        inst.reference = ReferenceSolution(inst.classical, "classical-integration")
        instances.append(inst)
    return StochasticHeat(instances, rule.weights, rule.nodes, kl, dm.grid.interior)


PROBLEMS = ("dense-ode", "stochastic-ode", "heat", "stochastic-heat")


@dataclass
class VqsRun:
    times: np.ndarray
    thetas: np.ndarray
    coefficients: np.ndarray  # (steps+1, 2^n) decoded alpha * U(beta)|0>
    residuals: np.ndarray
    circuits_per_step: list
    counts: dict


def simulate(instance, t_final, dt=1e-3, layers=None, mode="exact", strategy="parallel",
             integrator="euler", initial=None, regularization=1e-8, seed=0):
    spec = instance.ansatz(layers)
    problem = VqsProblem(instance.hamiltonian, instance.initial, t_final, dt, mode, strategy,
                         integrator, regularization, instance.pauli_drop_tol)
    if initial is None:
        initial = initial_state(problem, spec, seed=seed)
    traj = evolve(problem, spec, initial=initial)
    coeffs = np.array([evaluate(AnsatzState(spec, th)).amplitudes for th in traj.theta_history])
    return VqsRun(traj.times, traj.theta_history, coeffs, traj.residuals,
                  traj.circuits_per_step, traj.counter.by_label())


def _simulate_task(args):
    instance, kwargs = args
    return simulate(instance, **kwargs)


def simulate_stochastic_heat(sh, t_final, workers=1, **kwargs):
    """Solve every collocation instance; they share one fitted initial state."""
    first = sh.instances[0]
    spec = first.ansatz(kwargs.get("layers"))
    probe = VqsProblem(first.hamiltonian, first.initial, t_final, kwargs.get("dt", 1e-3))
    kwargs = dict(kwargs, initial=initial_state(probe, spec, seed=kwargs.get("seed", 0)))
    tasks = [(inst, dict(kwargs, t_final=t_final)) for inst in sh.instances]
    if workers > 1:
        with ProcessPoolExecutor(workers) as pool:
            return list(pool.map(_simulate_task, tasks))
    return [_simulate_task(t) for t in tasks]
