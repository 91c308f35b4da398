"""Dense complex matrix kernel.

Conventions used throughout the package: matrices are numpy arrays in
row-major order, and in a tensor product the first operand is the slow
(leading) index.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Literal

import numpy as np

HERMITIAN_TOL = 1e-10
MAX_JACOBI_SWEEPS = 100


class LinalgError(ValueError):
    pass


class DimensionError(LinalgError):
    pass


class NotHermitianError(LinalgError):
    pass


def as_complex_matrix(m) -> np.ndarray:
    """Coerce to a finite 2-d complex array."""
    a = np.asarray(m, dtype=complex)
    if a.ndim != 2:
        raise DimensionError(f"expected a 2-d matrix, got shape {a.shape}")
    if not np.all(np.isfinite(a)):
        raise LinalgError("matrix has non-finite entries")
    return a


def dagger(m: np.ndarray) -> np.ndarray:
    return np.conj(np.swapaxes(m, -1, -2))


def hermitian_defect(h: np.ndarray) -> float:
    return float(np.max(np.abs(h - dagger(h)))) if h.size else 0.0


def symmetrize(h, tol: float = HERMITIAN_TOL) -> np.ndarray:
    """Return (H + H^dagger)/2, refusing inputs whose defect exceeds ``tol``."""
    h = as_complex_matrix(h)
    if h.shape[0] != h.shape[1]:
        raise DimensionError(f"matrix is not square: {h.shape}")
    defect = hermitian_defect(h)
    if defect > tol:
        raise NotHermitianError(f"Hermiticity defect {defect:.3e} exceeds {tol:.1e}")
    return 0.5 * (h + dagger(h))


def tensor_product(a, b) -> np.ndarray:
    return np.kron(as_complex_matrix(a), as_complex_matrix(b))


def partial_trace(rho, dim_a: int, dim_b: int, keep: Literal["A", "B"] = "A") -> np.ndarray:
    """Reduce a state on A (leading) x B (trailing) to one subsystem."""
    rho = np.asarray(rho, dtype=complex)
    d = dim_a * dim_b
    if rho.shape[-2:] != (d, d):
        raise DimensionError(f"shape {rho.shape[-2:]} does not match {dim_a}x{dim_b}")
    t = rho.reshape(rho.shape[:-2] + (dim_a, dim_b, dim_a, dim_b))
    if keep == "A":
        return np.einsum("...ijkj->...ik", t)
    if keep == "B":
        return np.einsum("...ijil->...jl", t)
    raise ValueError(f"keep must be 'A' or 'B', got {keep!r}")


@dataclass(frozen=True)
class HermitianEigen:
    """Eigenvalues ascending; eigenvectors are the columns of ``vectors``."""

    values: np.ndarray
    vectors: np.ndarray

    def reconstruct(self) -> np.ndarray:
        return (self.vectors * self.values) @ dagger(self.vectors)


def _jacobi(a: np.ndarray, tol: float) -> tuple[np.ndarray, np.ndarray]:
    """Cyclic complex Jacobi: returns (diagonalized matrix, accumulated rotations)."""
    n = a.shape[0]
    a = a.copy()
    v = np.eye(n, dtype=complex)
    scale = max(float(np.max(np.abs(a))), 1.0)
    offdiag = ~np.eye(n, dtype=bool)
    for _ in range(MAX_JACOBI_SWEEPS):
        if float(np.max(np.abs(a[offdiag]), initial=0.0)) <= tol * scale:
            return a, v
        for p in range(n - 1):
            for q in range(p + 1, n):
                apq = a[p, q]
                r = abs(apq)
                if r <= 1e-300:
                    continue
                phase = apq / r
                theta = 0.5 * np.arctan2(2.0 * r, (a[p, p] - a[q, q]).real)
                c, s = np.cos(theta), np.sin(theta)
                # G = diag(1, conj(phase)) @ [[c, -s], [s, c]] zeroes a[p, q] under G^dagger A G
                g = np.array([[c, -s], [s * np.conj(phase), c * np.conj(phase)]])
                idx = [p, q]
                a[:, idx] = a[:, idx] @ g
                a[idx, :] = dagger(g) @ a[idx, :]
                v[:, idx] = v[:, idx] @ g
                a[p, q] = a[q, p] = 0.0
    raise LinalgError(f"Jacobi did not converge in {MAX_JACOBI_SWEEPS} sweeps")


def hermitian_eigendecompose(h, method: Literal["jacobi", "lapack"] = "jacobi") -> HermitianEigen:
    """Eigendecomposition of a Hermitian matrix.

    ``method="jacobi"`` runs the in-package cyclic Jacobi solver; ``"lapack"``
    delegates to ``numpy.linalg.eigh``. The two share no code, which the
    test suite uses to cross-check each against the other.
    """
    h = symmetrize(h)
    if method == "lapack":
        values, vectors = np.linalg.eigh(h)
        return HermitianEigen(values, vectors)
    if method != "jacobi":
        raise ValueError(f"unknown eigensolver {method!r}")
    diag, vectors = _jacobi(h, tol=1e-15)
    values = np.real(np.diag(diag))
    order = np.argsort(values, kind="stable")
    return HermitianEigen(values[order], vectors[:, order])


def hermitian_function(
    h,
    f: Callable[[np.ndarray], np.ndarray],
    method: Literal["jacobi", "lapack"] = "jacobi",
) -> np.ndarray:
    """Apply a scalar function to a Hermitian matrix through its spectrum.

    ``f`` receives the real eigenvalue array and must return finite values.
    """
    eig = hermitian_eigendecompose(h, method=method)
    with np.errstate(all="ignore"):
        fv = np.asarray(f(eig.values), dtype=complex)
    if fv.shape != eig.values.shape or not np.all(np.isfinite(fv)):
        raise LinalgError("spectral function produced non-finite values")
    return (eig.vectors * fv) @ dagger(eig.vectors)


def expm_hermitian_batch(hs: np.ndarray, t: float) -> np.ndarray:
    """exp(-i t H) for a stack of Hermitian matrices, via batched ``eigh``."""
    values, vectors = np.linalg.eigh(hs)
    phases = np.exp(-1j * t * values)
    return (vectors * phases[..., None, :]) @ dagger(vectors)


def ordered_product(mats: np.ndarray) -> np.ndarray:
    """M[n-1] @ ... @ M[1] @ M[0] along axis -3, by pairwise reduction."""
    mats = np.asarray(mats)
    while mats.shape[-3] > 1:
        n = mats.shape[-3]
        if n % 2:
            head = mats[..., :-1, :, :]
            tail = mats[..., -1:, :, :]
        else:
            head, tail = mats, None
        paired = head[..., 1::2, :, :] @ head[..., 0::2, :, :]
        mats = paired if tail is None else np.concatenate([paired, tail], axis=-3)
    return mats[..., 0, :, :]
