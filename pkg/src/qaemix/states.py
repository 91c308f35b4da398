"""Input-state families and Hamiltonian builders."""
from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from .linalg import hermitian_eigendecompose, hermitian_function
from .qinfo import DensityMatrix, PureState, validate_density

I2 = np.eye(2, dtype=complex)
X = np.array([[0, 1], [1, 0]], dtype=complex)
Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
Z = np.array([[1, 0], [0, -1]], dtype=complex)

FAMILIES = ("thermal", "werner", "blended", "haar", "mixed", "zero")
MAX_EXPONENT = 700.0


def embed(ops: dict[int, np.ndarray], n_qubits: int) -> np.ndarray:
    """Tensor single-qubit operators at the given sites, identity elsewhere (site 0 leads)."""
    return reduce(np.kron, [ops.get(k, I2) for k in range(n_qubits)])


def ising_hamiltonian(n_qubits: int) -> np.ndarray:
    """Open-chain transverse-field Ising model with unit couplings: -(sum ZZ + sum X)."""
    if n_qubits < 2:
        raise ValueError("Ising chain needs at least 2 qubits")
    h = sum(embed({j: Z, j + 1: Z}, n_qubits) for j in range(n_qubits - 1))
    h = h + sum(embed({j: X}, n_qubits) for j in range(n_qubits))
    return -h


def thermal_state(n_qubits: int, beta: float) -> DensityMatrix:
    if not np.isfinite(beta) or beta < 0:
        raise ValueError(f"beta must be finite and non-negative, got {beta}")
    h = ising_hamiltonian(n_qubits)
    eig = hermitian_eigendecompose(h)
    spread = float(eig.values[-1] - eig.values[0])
    if beta * spread > MAX_EXPONENT:
        raise OverflowError(f"beta*spectral range = {beta * spread:.1f} exceeds {MAX_EXPONENT}")
    # shift by the ground energy so the largest weight is exp(0)
    e0 = float(eig.values[0])
    g = hermitian_function(h, lambda lam: np.exp(-beta * (lam - e0)))
    return validate_density(g / np.trace(g).real)


def swap_operator(d: int) -> np.ndarray:
    s = np.zeros((d * d, d * d), dtype=complex)
    for k in range(d):
        for j in range(d):
            s[k * d + j, j * d + k] = 1.0
    return s


def werner_state(d: int, alpha: float) -> DensityMatrix:
    """(I - alpha * SWAP) / (d^2 - d*alpha) on C^d x C^d."""
    if d < 2:
        raise ValueError("Werner state needs d >= 2")
    if not -1.0 <= alpha <= 1.0:
        raise ValueError(f"alpha must lie in [-1, 1], got {alpha}")
    m = (np.eye(d * d) - alpha * swap_operator(d)) / (d * d - d * alpha)
    return validate_density(m)


def blended_state(d: int, p0: float, psi: PureState) -> DensityMatrix:
    if not 0.0 <= p0 <= 1.0:
        raise ValueError(f"p0 must lie in [0, 1], got {p0}")
    if psi.dim != d:
        raise ValueError(f"psi has dimension {psi.dim}, expected {d}")
    proj = np.outer(psi.amplitudes, psi.amplitudes.conj())
    return validate_density(p0 * proj + (1.0 - p0) * np.eye(d) / d)


def haar_random_pure(d: int, seed: int) -> PureState:
    if d < 2:
        raise ValueError("dimension must be >= 2")
    rng = np.random.default_rng(seed)
    v = rng.standard_normal(d) + 1j * rng.standard_normal(d)
    return PureState(v / np.linalg.norm(v))


def maximally_mixed(d: int) -> DensityMatrix:
    return DensityMatrix(np.eye(d, dtype=complex) / d)


def basis_zero(d: int) -> DensityMatrix:
    m = np.zeros((d, d), dtype=complex)
    m[0, 0] = 1.0
    return DensityMatrix(m)


@dataclass
class StateFamilySpec:
    """One member of an input-state family.

    ``value`` is the swept parameter: beta (thermal), alpha (werner) or p0
    (blended); ignored for the other families. ``seed`` selects the pure
    state of the blended and haar families.
    """

    family: str
    n_qubits: int = 2
    value: float = 0.0
    seed: int = 0
    extra: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.family not in FAMILIES:
            raise ValueError(f"unknown family {self.family!r}; choose from {FAMILIES}")
        if self.n_qubits < 1:
            raise ValueError("n_qubits must be positive")
        if self.family == "werner":
            if self.n_qubits % 2:
                raise ValueError("Werner states need an even qubit count")
            if not -1.0 <= self.value <= 1.0:
                raise ValueError("Werner alpha must lie in [-1, 1]")
        if self.family == "blended" and not 0.0 <= self.value <= 1.0:
            raise ValueError("p0 must lie in [0, 1]")

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def param_name(self) -> str:
        return {"thermal": "beta", "werner": "alpha", "blended": "p0"}.get(self.family, "none")

    def build(self) -> DensityMatrix:
        d = self.dim
        if self.family == "thermal":
            return thermal_state(self.n_qubits, self.value)
        if self.family == "werner":
            return werner_state(2 ** (self.n_qubits // 2), self.value)
        if self.family == "blended":
            return blended_state(d, self.value, haar_random_pure(d, self.seed))
        if self.family == "haar":
            return haar_random_pure(d, self.seed).projector()
        if self.family == "mixed":
            return maximally_mixed(d)
        return basis_zero(d)

    def with_value(self, value: float) -> "StateFamilySpec":
        return StateFamilySpec(self.family, self.n_qubits, float(value), self.seed, dict(self.extra))
