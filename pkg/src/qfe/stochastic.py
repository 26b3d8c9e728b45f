"""Probability-space tools: Hermite chaos, quadrature, KL expansion, moment readout.

Chaos polynomials are the orthonormal probabilists' Hermite polynomials
``h_k = He_k / sqrt(k!)`` under the standard normal density, so ``h_0 = 1``
and the mean and variance of ``sum_k mu_k h_k(xi)`` are ``mu_0`` and
``sum_{k>=1} mu_k**2``. The KL eigenfunction basis is different: the
weighted, L2(R)-orthonormal Hermite functions
``eta_k(x) = H_k(x) exp(-x^2/2) / sqrt(sqrt(pi) 2^k k!)``.
"""

import itertools
import math
from dataclasses import dataclass

import numpy as np
from numpy.polynomial import hermite, hermite_e


@dataclass(frozen=True)
class HermiteBasis:
    order: int  # number of polynomials Q

    def __call__(self, xi):
        return hermite_orthonormal(self.order, xi)


def hermite_orthonormal(order, xi):
    """Rows ``h_0(xi) .. h_{order-1}(xi)``."""
    xi = np.asarray(xi, dtype=float)
    out = np.empty((order, *xi.shape))
    for k in range(order):
        coef = np.zeros(k + 1)
        coef[k] = 1.0
        out[k] = hermite_e.hermeval(xi, coef) / math.sqrt(math.factorial(k))
    return out


@dataclass(frozen=True)
class QuadratureRule:
    nodes: np.ndarray  # (m, dims)
    weights: np.ndarray  # (m,), sums to 1

    @property
    def dims(self):
        return self.nodes.shape[1]

    def expect(self, values):
        """Weighted sum over nodes along the first axis."""
        return np.tensordot(self.weights, np.asarray(values), axes=(0, 0))


def gauss_hermite(nodes, dims=1):
    """Gauss-Hermite rule for the standard normal, tensorized over ``dims``."""
    if nodes < 1:
        raise ValueError("need at least one node")
    x, w = hermite_e.hermegauss(nodes)
    w = w / w.sum()
    if dims == 0:
        return QuadratureRule(np.zeros((1, 0)), np.ones(1))
    pts = np.array(list(itertools.product(x, repeat=dims)))
    wts = np.array([np.prod(c) for c in itertools.product(w, repeat=dims)])
    return QuadratureRule(pts, wts)


def triple_products(N):
    """``e[l, i, j] = <h_l, h_i h_j> / <h_l, h_l>`` for indices below ``N``."""
    if N < 1:
        raise ValueError("need N >= 1")
    rule = gauss_hermite(math.ceil((3 * N + 1) / 2))
    h = hermite_orthonormal(N, rule.nodes[:, 0])
    num = np.einsum("q,lq,iq,jq->lij", rule.weights, h, h, h)
    norms = np.einsum("q,lq,lq->l", rule.weights, h, h)
    num = 0.5 * (num + num.transpose(0, 2, 1))  # exact (i, j) symmetry despite rounding
    return num / norms[:, None, None]


def galerkin_hamiltonian(a_coeffs, N):
    """Generator of ``d mu_l/dt = sum_ij a_i mu_j e[l,i,j]`` for ``du/dt = a(xi) u``."""
    a = np.asarray(a_coeffs, dtype=float)
    if a.size > N:
        raise ValueError("more coefficient terms than basis functions")
    e = triple_products(N)
    return np.einsum("i,lij->lj", a, e[:, : a.size, :])


def pce_coefficients(f, N, nodes=None):
    """Project ``f(xi)`` onto ``h_0 .. h_{N-1}`` by quadrature."""
    rule = gauss_hermite(nodes or max(2 * N + 20, 40))
    xi = rule.nodes[:, 0]
    return hermite_orthonormal(N, xi) @ (rule.weights * f(xi))


def pce_truncation_error(f, N, nodes=80):
    """``|| f - sum_{k<N} mu_k h_k ||`` in L2 of the standard normal."""
    rule = gauss_hermite(nodes)
    xi = rule.nodes[:, 0]
    mu = pce_coefficients(f, N, nodes)
    resid = f(xi) - mu @ hermite_orthonormal(N, xi)
    return float(np.sqrt(rule.weights @ resid**2))


@dataclass(frozen=True)
class Moments:
    mean: float
    variance: float
    std_error: float = 0.0  # of the sampled |amp_0|^2 estimate, 0 when exact


def extract_moments(amplitudes, alpha=1.0):
    """Mean and variance from an encoded chaos state with norm ``alpha``.

    ``mu_i = alpha * amp_i``; the mean is ``mu_0`` and the variance
    ``alpha^2 (1 - |amp_0|^2)``.
    """
    amps = getattr(amplitudes, "amplitudes", amplitudes)
    amps = np.asarray(amps)
    a0 = amps[0]
    return Moments(float(alpha * a0.real), float(alpha**2 * (1.0 - abs(a0) ** 2)))


def sample_amp0_squared(amplitudes, shots, rng):
    """Shot estimate of ``|amp_0|^2`` and its binomial standard error."""
    p = float(min(1.0, abs(np.asarray(getattr(amplitudes, "amplitudes", amplitudes))[0]) ** 2))
    hits = rng.binomial(shots, p)
    est = hits / shots
    return est, math.sqrt(max(est * (1 - est), 0.0) / shots)


def sampled_moments(amplitudes, alpha, shots, rng):
    """Moments with ``|amp_0|^2`` estimated from ``shots`` measurements.

    The sign of ``amp_0`` is taken from the state (amplitude estimation
    returns magnitudes only).
    """
    amps = np.asarray(getattr(amplitudes, "amplitudes", amplitudes))
    p, se = sample_amp0_squared(amps, shots, rng)
    sign = 1.0 if amps[0].real >= 0 else -1.0
    return Moments(float(alpha * sign * math.sqrt(p)), float(alpha**2 * (1 - p)), se)


def hermite_functions(K, x):
    """Rows ``eta_0(x) .. eta_{K-1}(x)``, orthonormal in L2(R)."""
    x = np.asarray(x, dtype=float)
    return _hermite_poly_part(K, x) * np.exp(-(x**2) / 2)


def _hermite_poly_part(K, x):
    # H_k(x) / sqrt(sqrt(pi) 2^k k!) by the stable three-term recurrence.
    out = np.empty((K, *x.shape))
    out[0] = np.pi**-0.25
    if K > 1:
        out[1] = math.sqrt(2.0) * x * out[0]
    for k in range(1, K - 1):
        out[k + 1] = math.sqrt(2.0 / (k + 1)) * x * out[k] - math.sqrt(k / (k + 1)) * out[k - 1]
    return out


def physicists_hermite(k, x):
    """``H_k(x) = (-1)^k e^{x^2} d^k/dx^k e^{-x^2}``."""
    coef = np.zeros(k + 1)
    coef[k] = 1.0
    return hermite.hermval(x, coef)


class KlError(ValueError):
    pass


@dataclass
class KlExpansion:
    mean_fn: object
    eigenvalues: np.ndarray  # all K, descending
    vectors: np.ndarray  # (K, K); column i is d_i
    L: int

    @property
    def K(self):
        return self.eigenvalues.size

    def eigenfunctions(self, x, count=None):
        """Rows ``phi_i(x) = sum_k d_ik eta_k(x)`` for ``i < count`` (default L)."""
        count = self.L if count is None else count
        return self.vectors[:, :count].T @ hermite_functions(self.K, x)

    def realize(self, x, xi):
        """``gamma(x) = mu(x) + sum_{i<L} sqrt(lambda_i) phi_i(x) xi_i``."""
        x = np.asarray(x, dtype=float)
        xi = np.asarray(xi, dtype=float)
        if xi.shape != (self.L,):
            raise ValueError(f"need {self.L} random variables, got {xi.shape}")
        out = np.asarray(self.mean_fn(x), dtype=float) + 0.0 * x
        if self.L == 0:
            return out
        phi = self.eigenfunctions(x)
        return out + (np.sqrt(np.maximum(self.eigenvalues[: self.L], 0.0)) * xi) @ phi

    def covariance(self, x, y, count=None):
        """Truncated ``sum_i lambda_i phi_i(x) phi_i(y)``."""
        count = self.L if count is None else count
        lam = self.eigenvalues[:count]
        return (self.eigenfunctions(x, count).T * lam) @ self.eigenfunctions(y, count)

    def variance_fraction(self):
        return float(self.eigenvalues[: self.L].sum() / self.eigenvalues.sum())


def kl_matrix(covariance_fn, K, quad_nodes=40):
    """``K_km = int int C(x, x') eta_k(x') eta_m(x) dx' dx`` by nested quadrature.

    Substituting ``x = sqrt(2) y`` turns each ``exp(-x^2/2)`` factor of the
    Hermite functions into the Gauss-Hermite weight ``exp(-y^2)``.
    """
    y, w = hermite.hermgauss(quad_nodes)
    x = math.sqrt(2.0) * y
    poly = _hermite_poly_part(K, x) * (math.sqrt(2.0) * w)
    cov = covariance_fn(x[:, None], x[None, :])
    return poly @ cov @ poly.T


def kl_expand(mean_fn, covariance_fn, K=20, L=None, energy=0.95, quad_nodes=40):
    """Karhunen-Loeve expansion over a weighted Hermite basis of size ``K``.

    ``L=None`` keeps the fewest terms whose eigenvalues reach ``energy`` of
    the total.
    """
    if L is not None and not 0 <= L <= K:
        raise ValueError(f"need 0 <= L <= K, got L={L}, K={K}")
    Kmat = kl_matrix(covariance_fn, K, quad_nodes)
    Kmat = 0.5 * (Kmat + Kmat.T)
    lam, vec = np.linalg.eigh(Kmat)
    order = np.argsort(lam)[::-1]
    lam, vec = lam[order], vec[:, order]
    if lam[-1] < -1e-10:
        raise KlError(f"covariance matrix has eigenvalue {lam[-1]:.3e}; kernel not PSD "
                      "or quadrature under-resolved")
    lam = np.where(lam < 0, 0.0, lam)
    if L is None:
        total = lam.sum()
        L = int(np.searchsorted(np.cumsum(lam), energy * total - 1e-15) + 1) if total > 0 else 0
        L = min(L, K)
    return KlExpansion(mean_fn, lam, vec, L)
