"""Quantum autoencoder with mixed reference states.

Subsystem A (trash, ``n_a`` qubits) is the leading tensor factor and B
(latent, ``n_b`` qubits) the trailing one, for the encoded state and for the
decoder input alike: the reconstruction is U_e^dagger (ref x latent) U_e, so
the reference takes the slot the trash state was traced out of.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .linalg import DimensionError, dagger, partial_trace
from .qinfo import (
    DensityMatrix,
    FidelityConvention,
    entropy_batch,
    fidelity,
    pure_overlap,
    quantum_mutual_information,
    validate_density,
)

DEFAULT_PR_GRID = tuple(round(0.1 * k, 1) for k in range(11))


@dataclass(frozen=True, eq=False)
class QaeProblem:
    n_a: int
    n_b: int
    rho0: DensityMatrix
    w: float = 0.5
    convention: FidelityConvention = "squared"

    def __post_init__(self):
        object.__setattr__(self, "rho0", validate_density(self.rho0))
        if self.n_a < 1 or self.n_b < 1:
            raise ValueError("need at least one trash and one latent qubit")
        if self.rho0.dim != 2 ** (self.n_a + self.n_b):
            raise DimensionError(
                f"rho0 has dimension {self.rho0.dim}, expected 2^{self.n_a + self.n_b}"
            )
        if not 0.0 <= self.w <= 1.0:
            raise ValueError(f"w must lie in [0, 1], got {self.w}")

    @property
    def d_a(self) -> int:
        return 2**self.n_a

    @property
    def d_b(self) -> int:
        return 2**self.n_b

    @property
    def dim(self) -> int:
        return self.d_a * self.d_b


def _u(u_e) -> np.ndarray:
    return np.asarray(u_e, dtype=complex)


def encode_split(problem: QaeProblem, u_e) -> tuple[DensityMatrix, DensityMatrix, DensityMatrix]:
    """Return (encoded, trash, latent) for U_e rho0 U_e^dagger."""
    u = _u(u_e)
    if u.shape != (problem.dim, problem.dim):
        raise DimensionError(f"encoder shape {u.shape} does not match dimension {problem.dim}")
    encoded = u @ problem.rho0.matrix @ dagger(u)
    encoded = 0.5 * (encoded + dagger(encoded))
    trash = partial_trace(encoded, problem.d_a, problem.d_b, keep="A")
    latent = partial_trace(encoded, problem.d_a, problem.d_b, keep="B")
    return validate_density(encoded), validate_density(trash), validate_density(latent)


def zero_ket(d: int) -> np.ndarray:
    v = np.zeros(d, dtype=complex)
    v[0] = 1.0
    return v


def j_pure(trash, convention: FidelityConvention = "squared") -> float:
    """Fidelity of the trash state with |0...0>."""
    trash = validate_density(trash)
    return pure_overlap(trash.matrix, zero_ket(trash.dim), convention)


def j_qmi(encoded, n_a: int, n_b: int) -> float:
    return -quantum_mutual_information(encoded, 2**n_a, 2**n_b)


def phi(problem: QaeProblem, u_e) -> float:
    encoded, trash, _ = encode_split(problem, u_e)
    jp = j_pure(trash, problem.convention)
    jq = j_qmi(encoded, problem.n_a, problem.n_b)
    return problem.w * jp + (1.0 - problem.w) * jq


def phi_terms_batch(problem: QaeProblem, unitaries: np.ndarray, s_rho0: float | None = None):
    """(phi, j_pure, j_qmi) arrays for a stack of encoders, without validation.

    S(U rho0 U^dagger) = S(rho0) for every unitary, so the joint entropy is
    computed once (pass ``s_rho0`` to skip even that).
    """
    u = np.asarray(unitaries)
    encoded = u @ problem.rho0.matrix @ dagger(u)
    trash = partial_trace(encoded, problem.d_a, problem.d_b, keep="A")
    latent = partial_trace(encoded, problem.d_a, problem.d_b, keep="B")
    if s_rho0 is None:
        s_rho0 = float(entropy_batch(problem.rho0.matrix))
    qmi = entropy_batch(trash) + entropy_batch(latent) - s_rho0
    jp = np.clip(trash[..., 0, 0].real, 0.0, 1.0)
    if problem.convention == "root":
        jp = np.sqrt(jp)
    jq = -qmi
    return problem.w * jp + (1.0 - problem.w) * jq, jp, jq


def qae_pure_bound(rho0, n_b: int) -> float:
    """Sum of the 2^n_b largest eigenvalues of rho0."""
    rho0 = validate_density(rho0)
    k = 2**n_b
    if k > rho0.dim:
        raise DimensionError(f"latent dimension {k} exceeds state dimension {rho0.dim}")
    values = np.linalg.eigvalsh(rho0.matrix)
    return float(min(np.sum(values[::-1][:k]), 1.0))


@dataclass(frozen=True)
class ReferenceStrategy:
    """How the reference state is chosen.

    kind: ``trash`` (copy the trash state), ``pure`` (|0...0>) or ``mix``
    (p_r |0><0| + (1 - p_r) I/d_A). For ``mix``, ``source`` picks p_r:
    ``fixed`` uses ``p_r``, ``bound`` squares the pure-reference bound,
    ``guess`` squares the trained J_pure, ``grid`` searches ``candidates``.
    """

    kind: str = "trash"
    source: str = "fixed"
    p_r: float | None = None
    candidates: tuple[float, ...] = DEFAULT_PR_GRID

    def __post_init__(self):
        if self.kind not in ("trash", "pure", "mix"):
            raise ValueError(f"unknown reference kind {self.kind!r}")
        if self.kind == "mix":
            if self.source not in ("fixed", "grid", "bound", "guess"):
                raise ValueError(f"unknown p_r source {self.source!r}")
            if self.source == "fixed" and (self.p_r is None or not 0.0 <= self.p_r <= 1.0):
                raise ValueError("fixed p_r must lie in [0, 1]")
            if self.source == "grid":
                if not self.candidates:
                    raise ValueError("empty p_r candidate list")
                if any(not 0.0 <= c <= 1.0 for c in self.candidates):
                    raise ValueError("p_r candidates must lie in [0, 1]")

    @property
    def label(self) -> str:
        if self.kind != "mix":
            return self.kind
        if self.source == "fixed":
            return f"mix-{self.p_r:g}"
        return f"mix-{self.source}"

    @classmethod
    def parse(cls, ref: str, pr: str | float | None = None) -> "ReferenceStrategy":
        """From CLI-style strings: ref in {trash, pure, mix}; pr in {grid, bound, guess, FLOAT}."""
        if ref != "mix":
            return cls(kind=ref)
        if pr is None:
            pr = "grid"
        if isinstance(pr, str) and pr in ("grid", "bound", "guess"):
            return cls(kind="mix", source=pr)
        return cls(kind="mix", source="fixed", p_r=float(pr))


def mix_reference(p_r: float, d_a: int) -> DensityMatrix:
    if not 0.0 <= p_r <= 1.0:
        raise ValueError(f"p_r must lie in [0, 1], got {p_r}")
    m = (1.0 - p_r) * np.eye(d_a, dtype=complex) / d_a
    m[0, 0] += p_r
    return DensityMatrix(m)


def build_reference(
    strategy: ReferenceStrategy,
    *,
    n_a: int,
    trash=None,
    rho0=None,
    n_b: int | None = None,
    current_j_pure: float | None = None,
) -> tuple[DensityMatrix, float | None]:
    d_a = 2**n_a
    if strategy.kind == "trash":
        if trash is None:
            raise ValueError("trash-clone reference needs the trash state")
        trash = validate_density(trash)
        return DensityMatrix(trash.matrix.copy()), None
    if strategy.kind == "pure":
        return mix_reference(1.0, d_a), None
    if strategy.source == "fixed":
        p_r = strategy.p_r
    elif strategy.source == "bound":
        if rho0 is None or n_b is None:
            raise ValueError("bound-derived p_r needs rho0 and n_b")
        p_r = qae_pure_bound(rho0, n_b) ** 2
    elif strategy.source == "guess":
        if current_j_pure is None:
            raise ValueError("guessed p_r needs the trained J_pure")
        p_r = float(np.clip(current_j_pure, 0.0, 1.0)) ** 2
    else:
        raise ValueError("grid p_r is resolved by grid_search_pr, not build_reference")
    return mix_reference(p_r, d_a), p_r


def decode(u_e, latent, reference) -> DensityMatrix:
    """rho_f = U_e^dagger (reference x latent) U_e."""
    u = _u(u_e)
    latent = validate_density(latent)
    reference = validate_density(reference)
    if reference.dim * latent.dim != u.shape[0]:
        raise DimensionError(
            f"reference ({reference.dim}) x latent ({latent.dim}) does not match encoder {u.shape[0]}"
        )
    combined = np.kron(reference.matrix, latent.matrix)
    rho_f = dagger(u) @ combined @ u
    return validate_density(0.5 * (rho_f + dagger(rho_f)))


def decoding_fidelity(rho0, rho_f, convention: FidelityConvention = "squared") -> float:
    return fidelity(rho0, rho_f, convention)


def grid_search_pr(
    problem: QaeProblem, u_e, candidates: Sequence[float] = DEFAULT_PR_GRID
) -> tuple[float, float, list[tuple[float, float]]]:
    """Best p_r over ``candidates`` by decoding fidelity; ties go to the larger p_r."""
    if len(candidates) == 0:
        raise ValueError("empty candidate list")
    _, _, latent = encode_split(problem, u_e)
    table = []
    for p_r in candidates:
        rho_f = decode(u_e, latent, mix_reference(float(p_r), problem.d_a))
        table.append((float(p_r), decoding_fidelity(problem.rho0, rho_f, problem.convention)))
    best_p, best_jd = max(table, key=lambda row: (row[1], row[0]))
    return best_p, best_jd, table


def evaluate_ensemble(
    members: Sequence[tuple[float, object]], u_e, reference, n_a: int, n_b: int,
    convention: FidelityConvention = "squared",
) -> tuple[list[float], float]:
    """Compress each member with a shared encoder and reference.

    Returns the per-member decoding fidelities and their weighted mean.
    """
    weights = np.array([w for w, _ in members], dtype=float)
    if len(members) == 0 or np.any(weights < 0) or abs(weights.sum() - 1.0) > 1e-9:
        raise ValueError("ensemble weights must be non-negative and sum to 1")
    jds = []
    for _, rho in members:
        prob = QaeProblem(n_a, n_b, validate_density(rho), convention=convention)
        _, _, latent = encode_split(prob, u_e)
        rho_f = decode(u_e, latent, reference)
        jds.append(decoding_fidelity(prob.rho0, rho_f, convention))
    return jds, float(np.dot(weights, jds))


@dataclass
class CompressionResult:
    j_pure: float
    j_qmi: float
    j_e: float
    j_d: float
    phi: float
    bound: float
    p_r_used: float | None
    latent: DensityMatrix = field(repr=False)
    trash: DensityMatrix = field(repr=False)
    reconstructed: DensityMatrix = field(repr=False)
    grid_table: list[tuple[float, float]] | None = field(default=None, repr=False)

    def metrics(self) -> dict:
        return {
            "j_pure": self.j_pure,
            "j_qmi": self.j_qmi,
            "j_e": self.j_e,
            "j_d": self.j_d,
            "phi": self.phi,
            "bound": self.bound,
            "p_r_used": self.p_r_used,
        }


def compress(
    problem: QaeProblem,
    u_e,
    strategy: ReferenceStrategy,
    trained_j_pure: float | None = None,
) -> CompressionResult:
    """Encode, pick the reference per ``strategy``, decode and score.

    ``trained_j_pure`` feeds the ``guess`` source; it defaults to the J_pure
    of ``u_e`` itself.
    """
    encoded, trash, latent = encode_split(problem, u_e)
    jp = j_pure(trash, problem.convention)
    jq = j_qmi(encoded, problem.n_a, problem.n_b)
    table = None
    if strategy.kind == "mix" and strategy.source == "grid":
        p_r, _, table = grid_search_pr(problem, u_e, strategy.candidates)
        reference = mix_reference(p_r, problem.d_a)
    else:
        reference, p_r = build_reference(
            strategy,
            n_a=problem.n_a,
            trash=trash,
            rho0=problem.rho0,
            n_b=problem.n_b,
            current_j_pure=jp if trained_j_pure is None else trained_j_pure,
        )
    rho_f = decode(u_e, latent, reference)
    return CompressionResult(
        j_pure=jp,
        j_qmi=jq,
        j_e=fidelity(trash, reference, problem.convention),
        j_d=decoding_fidelity(problem.rho0, rho_f, problem.convention),
        phi=problem.w * jp + (1.0 - problem.w) * jq,
        bound=qae_pure_bound(problem.rho0, problem.n_b),
        p_r_used=p_r,
        latent=latent,
        trash=trash,
        reconstructed=rho_f,
        grid_table=table,
    )
