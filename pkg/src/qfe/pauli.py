"""Pauli-string algebra.

Pauli strings are written most-significant qubit first, so ``"ZI"`` acts with
``Z`` on qubit 1 and identity on qubit 0. Each string also carries an integer
index in ``[0, 4**n)``: qubit ``q`` contributes the base-4 digit
``2*x_bit + z_bit`` at position ``q``, i.e. ``I=0, Z=1, X=2, Y=3``. The same
digit is the value of the (z, x) ancilla pair that selects that letter in the
V-block, so ancilla basis state ``|i>`` selects Pauli string index ``i``.
"""

from dataclasses import dataclass, field

import numpy as np

LETTERS = "IZXY"
DIGIT = {letter: d for d, letter in enumerate(LETTERS)}
DROP_TOL = 1e-14


@dataclass(frozen=True)
class PauliString:
    letters: str

    def __post_init__(self):
        if not self.letters or any(ch not in DIGIT for ch in self.letters):
            raise ValueError(f"invalid Pauli string {self.letters!r}")

    @property
    def n(self):
        return len(self.letters)

    @property
    def index(self):
        idx = 0
        for q, ch in enumerate(reversed(self.letters)):
            idx += DIGIT[ch] * 4**q
        return idx

    @classmethod
    def from_index(cls, index, n):
        if not 0 <= index < 4**n:
            raise ValueError(f"index {index} out of range for n={n}")
        digits = []
        for _ in range(n):
            digits.append(LETTERS[index % 4])
            index //= 4
        return cls("".join(reversed(digits)))

    def masks(self):
        """Return ``(x_mask, z_mask, n_y)`` over computational-basis bits."""
        x_mask = z_mask = n_y = 0
        for q, ch in enumerate(reversed(self.letters)):
            if ch in "XY":
                x_mask |= 1 << q
            if ch in "ZY":
                z_mask |= 1 << q
            if ch == "Y":
                n_y += 1
        return x_mask, z_mask, n_y

    def __str__(self):
        return self.letters


def as_pauli(p):
    return p if isinstance(p, PauliString) else PauliString(str(p))


def all_strings(n):
    return [PauliString.from_index(i, n) for i in range(4**n)]


def _parity(values):
    values = np.asarray(values, dtype=np.int64).copy()
    out = np.zeros_like(values)
    while values.any():
        out ^= values & 1
        values >>= 1
    return out


def pauli_action(pauli, n=None):
    """Permutation and phases of a Pauli string on basis states.

    Returns ``(target, phase)`` such that ``P|b> = phase[b] |target[b]>``.
    """
    pauli = as_pauli(pauli)
    n = pauli.n if n is None else n
    x_mask, z_mask, n_y = pauli.masks()
    basis = np.arange(2**n, dtype=np.int64)
    # Y = i X Z, so the Z-part acts first on the input bit.
    sign = 1 - 2 * _parity(basis & z_mask)
    phase = (1j**n_y) * sign
    return basis ^ x_mask, phase


def pauli_matrix(pauli):
    pauli = as_pauli(pauli)
    dim = 2**pauli.n
    target, phase = pauli_action(pauli)
    mat = np.zeros((dim, dim), dtype=complex)
    mat[target, np.arange(dim)] = phase
    return mat


@dataclass
class PauliDecomposition:
    n: int
    terms: list = field(default_factory=list)  # [(PauliString, complex)]

    def as_dict(self):
        return {str(p): c for p, c in self.terms}


@dataclass
class HamiltonianPart:
    """Positive combination ``g * sum_i c_i sigma_i`` with ``sum_i c_i = 1``."""

    scale: float
    terms: list = field(default_factory=list)  # [(PauliString, float)]

    @property
    def empty(self):
        return not self.terms

    def coefficient_vector(self, n):
        c = np.zeros(4**n)
        for p, ci in self.terms:
            c[p.index] = ci
        return c


# Each part multiplies its positive combination by this phase when rebuilding H.
PART_PHASES = (1.0, -1.0, 1j, -1j)


@dataclass
class SplitHamiltonian:
    n: int
    parts: tuple  # four HamiltonianPart, in the order of PART_PHASES

    @property
    def scales(self):
        return tuple(p.scale for p in self.parts)


def _check_power_of_two(matrix):
    matrix = np.asarray(matrix, dtype=complex)
    if matrix.ndim != 2 or matrix.shape[0] != matrix.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {matrix.shape}")
    dim = matrix.shape[0]
    n = dim.bit_length() - 1
    if dim < 2 or 2**n != dim:
        raise ValueError(f"matrix size {dim} is not a power of two >= 2")
    return matrix, n


def decompose(matrix, drop_tol=DROP_TOL):
    """Pauli decomposition ``gamma_i = Tr(sigma_i M) / 2**n``.

    Terms with ``|gamma_i| < drop_tol`` are omitted; ``drop_tol=0`` keeps all
    ``4**n`` strings, as in the worst-case accounting for a dense generator.
    """
    matrix, n = _check_power_of_two(matrix)
    dim = 2**n
    cols = np.arange(dim)
    terms = []
    for idx in range(4**n):
        p = PauliString.from_index(idx, n)
        target, phase = pauli_action(p, n)
        # Tr(P M) = sum_b <b|P M|b> = sum_b phase[b'] M[b', b] with target[b'] = b.
        gamma = np.sum(phase * matrix[cols, target]) / dim
        if abs(gamma) >= drop_tol:
            terms.append((p, complex(gamma)))
    return PauliDecomposition(n, terms)


def split(decomp, drop_tol=DROP_TOL):
    """Split into four positive-coefficient parts (Re+, Re-, Im+, Im-).

    Real and imaginary parts of one coefficient land in separate parts;
    components below ``drop_tol`` are numerical zeros and are skipped.
    """
    buckets = ([], [], [], [])
    for p, gamma in decomp.terms:
        re, im = gamma.real, gamma.imag
        if re >= drop_tol:
            buckets[0].append((p, re))
        elif re <= -drop_tol:
            buckets[1].append((p, -re))
        if im >= drop_tol:
            buckets[2].append((p, im))
        elif im <= -drop_tol:
            buckets[3].append((p, -im))
    parts = []
    for bucket in buckets:
        g = float(sum(w for _, w in bucket))
        parts.append(HamiltonianPart(g, [(p, w / g) for p, w in bucket] if g > 0 else []))
    return SplitHamiltonian(decomp.n, tuple(parts))


def to_matrix(obj):
    """Dense matrix of a decomposition, split Hamiltonian, or Pauli string."""
    if isinstance(obj, (PauliString, str)):
        return pauli_matrix(obj)
    if not isinstance(obj, (PauliDecomposition, SplitHamiltonian)):
        raise TypeError(f"cannot build a matrix from {type(obj).__name__}")
    dim = 2**obj.n
    out = np.zeros((dim, dim), dtype=complex)
    if isinstance(obj, PauliDecomposition):
        for p, gamma in obj.terms:
            out += gamma * pauli_matrix(p)
        return out
    for phase, part in zip(PART_PHASES, obj.parts):
        for p, c in part.terms:
            out += phase * part.scale * c * pauli_matrix(p)
    return out
