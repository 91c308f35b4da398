"""Entropy, fidelity, mutual information and purification on density matrices."""
from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from .linalg import (
    DimensionError,
    LinalgError,
    as_complex_matrix,
    dagger,
    hermitian_defect,
    hermitian_eigendecompose,
    partial_trace,
)

TRACE_TOL = 1e-10
PSD_TOL = 1e-9
CLAMP_MASS_TOL = 1e-8
ENTROPY_FLOOR = 1e-12

FidelityConvention = Literal["squared", "root"]


class InvalidStateError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class DensityMatrix:
    """A validated density matrix. Build through :func:`validate_density`."""

    matrix: np.ndarray

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


@dataclass(frozen=True, eq=False)
class PureState:
    amplitudes: np.ndarray

    def __post_init__(self):
        norm = float(np.vdot(self.amplitudes, self.amplitudes).real)
        if abs(norm - 1.0) > 1e-10:
            raise InvalidStateError(f"pure state has squared norm {norm}")

    @property
    def dim(self) -> int:
        return self.amplitudes.shape[0]

    def projector(self) -> DensityMatrix:
        psi = self.amplitudes
        return DensityMatrix(np.outer(psi, psi.conj()))


def validate_density(m) -> DensityMatrix:
    """Check Hermiticity, unit trace and positivity; absorb tiny negative eigenvalues.

    Eigenvalues in [-1e-9, 0) are clamped to zero and the trace renormalized,
    provided the total clamped mass is below 1e-8.
    """
    if isinstance(m, DensityMatrix):
        return m
    try:
        a = as_complex_matrix(m)
    except LinalgError as exc:
        raise InvalidStateError(str(exc)) from exc
    if a.shape[0] != a.shape[1] or a.shape[0] < 1:
        raise InvalidStateError(f"density matrix must be square, got {a.shape}")
    defect = hermitian_defect(a)
    if defect > 1e-10:
        raise InvalidStateError(f"not Hermitian (defect {defect:.2e})")
    a = 0.5 * (a + dagger(a))
    tr = float(np.trace(a).real)
    if abs(tr - 1.0) > TRACE_TOL:
        raise InvalidStateError(f"trace {tr!r} is not 1")
    values, vectors = np.linalg.eigh(a)
    if values[0] < -PSD_TOL:
        raise InvalidStateError(f"negative eigenvalue {values[0]:.3e}")
    negative = values < 0
    if np.any(negative):
        mass = float(-values[negative].sum())
        if mass >= CLAMP_MASS_TOL:
            raise InvalidStateError(f"clamped mass {mass:.2e} too large")
        values = np.where(negative, 0.0, values)
        values = values / values.sum()
        a = (vectors * values) @ dagger(vectors)
        a = 0.5 * (a + dagger(a))
    return DensityMatrix(a)


def _entropy_from_values(values: np.ndarray) -> np.ndarray:
    v = np.where(values > ENTROPY_FLOOR, values, 1.0)
    return -np.sum(np.where(values > ENTROPY_FLOOR, v * np.log(v), 0.0), axis=-1)


def entropy_batch(rhos: np.ndarray) -> np.ndarray:
    """Von Neumann entropy (nats) for a stack of density matrices, no validation."""
    return _entropy_from_values(np.linalg.eigvalsh(rhos))


def von_neumann_entropy(rho) -> float:
    rho = validate_density(rho)
    return float(_entropy_from_values(np.linalg.eigvalsh(rho.matrix)))


def _sqrt_psd(m: np.ndarray) -> np.ndarray:
    values, vectors = np.linalg.eigh(0.5 * (m + dagger(m)))
    # eigenvalues below the solver's resolution are zero, not sqrt(noise) ~ 1e-8
    floor = m.shape[0] * np.finfo(float).eps * max(float(np.max(np.abs(values))), 1.0)
    return (vectors * np.sqrt(np.where(values > floor, values, 0.0))) @ dagger(vectors)


def fidelity(rho, sigma, convention: FidelityConvention = "squared") -> float:
    """Uhlmann fidelity. ``squared``: (Tr sqrt(sqrt(rho) sigma sqrt(rho)))^2; ``root``: without the square."""
    rho = validate_density(rho).matrix
    sigma = validate_density(sigma).matrix
    if rho.shape != sigma.shape:
        raise DimensionError(f"dimension mismatch {rho.shape} vs {sigma.shape}")
    # Tr sqrt(sqrt(rho) sigma sqrt(rho)) is the trace norm of sqrt(rho) sqrt(sigma);
    # singular values avoid square roots of ~1e-17 eigenvalues on rank-deficient inputs
    root = float(np.sum(np.linalg.svd(_sqrt_psd(rho) @ _sqrt_psd(sigma), compute_uv=False)))
    root = min(max(root, 0.0), 1.0)
    return _apply_convention(root * root, convention)


def _apply_convention(squared: float, convention: FidelityConvention) -> float:
    if convention == "squared":
        return squared
    if convention == "root":
        return float(np.sqrt(max(squared, 0.0)))
    raise ValueError(f"unknown fidelity convention {convention!r}")


def pure_overlap(rho, psi: np.ndarray, convention: FidelityConvention = "squared") -> float:
    """Fidelity against the pure state |psi>, i.e. <psi|rho|psi> under the squared form."""
    rho = np.asarray(rho)
    val = float(np.real(np.vdot(psi, rho @ psi)))
    return _apply_convention(min(max(val, 0.0), 1.0), convention)


def quantum_mutual_information(rho, dim_a: int, dim_b: int) -> float:
    """S(rho_A) + S(rho_B) - S(rho) in nats, with A the leading factor."""
    rho = validate_density(rho).matrix
    if rho.shape[0] != dim_a * dim_b:
        raise DimensionError(f"dim {rho.shape[0]} != {dim_a}*{dim_b}")
    s_ab = _entropy_from_values(np.linalg.eigvalsh(rho))
    s_a = _entropy_from_values(np.linalg.eigvalsh(partial_trace(rho, dim_a, dim_b, "A")))
    s_b = _entropy_from_values(np.linalg.eigvalsh(partial_trace(rho, dim_a, dim_b, "B")))
    return float(s_a + s_b - s_ab)


def purify(rho) -> PureState:
    """sum_i sqrt(p_i) |i_K>|i_R> with |i_R> the computational basis of R.

    Eigenpairs are ordered by descending eigenvalue, ties by the
    descending lexicographic order of the phase-fixed eigenvectors (so
    I/d purifies to sum_i |i>|i>/sqrt(d)), and the output is
    reproducible.
    """
    rho = validate_density(rho).matrix
    d = rho.shape[0]
    eig = hermitian_eigendecompose(rho)
    vecs = eig.vectors.copy()
    for k in range(d):
        col = vecs[:, k]
        pivot = col[np.argmax(np.abs(col) > 1e-12)]
        vecs[:, k] = col * (abs(pivot) / pivot)
    keys = [
        (-round(float(eig.values[k]), 12),)
        + tuple(-x for z in vecs[:, k] for x in (round(z.real, 12), round(z.imag, 12)))
        for k in range(d)
    ]
    order = sorted(range(d), key=lambda k: keys[k])
    psi = np.zeros(d * d, dtype=complex)
    for slot, k in enumerate(order):
        p = max(float(eig.values[k]), 0.0)
        basis_r = np.zeros(d)
        basis_r[slot] = 1.0
        psi += np.sqrt(p) * np.kron(vecs[:, k], basis_r)
    psi /= np.linalg.norm(psi)
    return PureState(psi)
