"""Chebyshev spectral collocation on Gauss-Chebyshev-Lobatto points."""

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class CollocationGrid:
    N: int
    points: np.ndarray  # x_j = cos(pi j / N), descending from +1 to -1

    @property
    def weights(self):
        """``c_bar_j``: 2 at the two end points, 1 inside."""
        c = np.ones(self.N + 1)
        c[0] = c[-1] = 2.0
        return c

    @property
    def interior(self):
        return self.points[1:-1]


@dataclass(frozen=True)
class DiffMatrices:
    grid: CollocationGrid
    D1: np.ndarray
    D2: np.ndarray


def build_grid(N):
    if N < 1:
        raise ValueError(f"need N >= 1, got {N}")
    return CollocationGrid(N, np.cos(np.pi * np.arange(N + 1) / N))


def build_D1(grid):
    """First-derivative matrix; the diagonal is set by the negative-row-sum rule."""
    x = grid.points
    N = grid.N
    c = grid.weights * (-1.0) ** np.arange(N + 1)
    dx = x[:, None] - x[None, :] + np.eye(N + 1)
    D = np.outer(c, 1.0 / c) / dx
    np.fill_diagonal(D, 0.0)
    np.fill_diagonal(D, -D.sum(axis=1))
    return D


def build_D2(grid):
    """Second-derivative matrix from the closed-form entries."""
    x = grid.points
    N = grid.N
    cb = grid.weights
    D = np.empty((N + 1, N + 1))
    corner = (N**4 - 1) / 15.0
    for j in range(N + 1):
        for l in range(N + 1):
            if j == l and j in (0, N):
                D[j, l] = corner
            elif j == 0:
                D[j, l] = (2.0 / 3.0) * (-1) ** l / cb[l] * (
                    ((2 * N**2 + 1) * (1 - x[l]) - 6) / (1 - x[l]) ** 2)
            elif j == N:
                D[j, l] = (2.0 / 3.0) * (-1) ** (l + N) / cb[l] * (
                    ((2 * N**2 + 1) * (1 + x[l]) - 6) / (1 + x[l]) ** 2)
            elif j == l:
                s = 1 - x[j] ** 2
                D[j, l] = -((N**2 - 1) * s + 3) / (3 * s**2)
            else:
                D[j, l] = (-1) ** (j + l) / cb[l] * (x[j] ** 2 + x[j] * x[l] - 2) / (
                    (1 - x[j] ** 2) * (x[j] - x[l]) ** 2)
    return D


def build_matrices(N):
    grid = build_grid(N)
    return DiffMatrices(grid, build_D1(grid), build_D2(grid))


def interior_restrict(D, dirichlet_zero=True):
    """Drop boundary rows and columns (homogeneous Dirichlet data)."""
    D = np.asarray(D)
    if not dirichlet_zero:
        raise ValueError("only homogeneous Dirichlet boundaries are supported")
    if D.shape[0] < 4:
        raise ValueError("need N >= 3 for a non-trivial interior")
    return D[1:-1, 1:-1].copy()


def interpolate(grid, values, x):
    """Evaluate the collocation interpolant ``sum_j u_j S_j(x)`` (barycentric form)."""
    values = np.asarray(values, dtype=float)
    x = np.atleast_1d(np.asarray(x, dtype=float))
    w = (-1.0) ** np.arange(grid.N + 1) / grid.weights
    diff = x[:, None] - grid.points[None, :]
    exact = np.isclose(diff, 0.0, atol=1e-15)
    diff[exact] = 1.0
    kernel = w / diff
    out = (kernel @ values) / kernel.sum(axis=1)
    rows, cols = np.nonzero(exact)
    out[rows] = values[cols]
    return out


def cardinal(grid, j, x):
    """``S_j(x) = (-1)^(j+1) (1-x^2) T_N'(x) / (c_bar_j N^2 (x - x_j))``."""
    x = np.asarray(x, dtype=float)
    N = grid.N
    dT = np.polynomial.chebyshev.Chebyshev.basis(N).deriv()(x)
    with np.errstate(divide="ignore", invalid="ignore"):
        s = (-1) ** (j + 1) * (1 - x**2) * dT / (grid.weights[j] * N**2 * (x - grid.points[j]))
    return np.where(np.isclose(x, grid.points[j], atol=1e-14), 1.0, s)


def interpolation_error(f, num_points, samples=2001):
    """Max-norm error of the interpolant of ``f`` through ``num_points`` nodes."""
    grid = build_grid(num_points - 1)
    xs = np.linspace(-1, 1, samples)
    return float(np.max(np.abs(interpolate(grid, f(grid.points), xs) - f(xs))))
