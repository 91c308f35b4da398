"""Piecewise-constant control of a Heisenberg spin chain.

The encoder is U(T) = U_N ... U_2 U_1 with
U_k = exp(-i dt (H0 + sum_j u_j[k] H_j)); later slices multiply on the left.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .linalg import dagger, expm_hermitian_batch, ordered_product
from .states import X, Y, Z, embed

UNITARY_TOL = 1e-9
N_CONTROLS = 4


class UnitarityError(ValueError):
    pass


@dataclass(frozen=True, eq=False)
class UnitaryOperator:
    matrix: np.ndarray

    def __post_init__(self):
        m = np.asarray(self.matrix, dtype=complex)
        if m.ndim != 2 or m.shape[0] != m.shape[1]:
            raise UnitarityError(f"unitary must be square, got {m.shape}")
        defect = unitarity_defect(m)
        if not defect <= UNITARY_TOL:
            raise UnitarityError(f"unitarity defect {defect:.2e} exceeds {UNITARY_TOL}")
        object.__setattr__(self, "matrix", m)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def adjoint(self) -> "UnitaryOperator":
        return UnitaryOperator(dagger(self.matrix))

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)


def unitarity_defect(u: np.ndarray) -> float:
    u = np.asarray(u)
    return float(np.max(np.abs(dagger(u) @ u - np.eye(u.shape[-1]))))


def heisenberg_drift(n_qubits: int) -> np.ndarray:
    if n_qubits < 2:
        raise ValueError("spin chain needs at least 2 qubits")
    h = np.zeros((2**n_qubits, 2**n_qubits), dtype=complex)
    for i in range(n_qubits - 1):
        for p in (X, Y, Z):
            h += embed({i: p, i + 1: p}, n_qubits)
    return h


def control_hamiltonians(n_qubits: int) -> list[np.ndarray]:
    """[X_0, Y_0, X_1, Y_1]."""
    if n_qubits < 2:
        raise ValueError("spin chain needs at least 2 qubits")
    return [embed({k: p}, n_qubits) for k in (0, 1) for p in (X, Y)]


@dataclass(frozen=True, eq=False)
class SpinChainSystem:
    n_qubits: int
    h0: np.ndarray
    controls: np.ndarray  # shape (M, d, d)

    @classmethod
    def heisenberg(cls, n_qubits: int) -> "SpinChainSystem":
        return cls(n_qubits, heisenberg_drift(n_qubits), np.array(control_hamiltonians(n_qubits)))

    @property
    def dim(self) -> int:
        return self.h0.shape[0]

    @property
    def n_controls(self) -> int:
        return self.controls.shape[0]


@dataclass
class ControlSchedule:
    amplitudes: np.ndarray  # (N, M)
    total_time: float = 20.0
    u_min: float = -10.0
    u_max: float = 10.0

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=float)
        if self.amplitudes.ndim != 2:
            raise ValueError("amplitudes must be an N x M grid")
        if not self.total_time > 0:
            raise ValueError("total_time must be positive")
        if not self.u_min <= self.u_max:
            raise ValueError("bounds must be ordered")
        if np.any(np.isnan(self.amplitudes)):
            raise ValueError("NaN control amplitude")
        if np.any(self.amplitudes < self.u_min) or np.any(self.amplitudes > self.u_max):
            raise ValueError(f"amplitude outside [{self.u_min}, {self.u_max}]")

    @property
    def n_pieces(self) -> int:
        return self.amplitudes.shape[0]

    @property
    def dt(self) -> float:
        return self.total_time / self.n_pieces

    def to_dict(self) -> dict:
        return {
            "total_time": self.total_time,
            "n_pieces": self.n_pieces,
            "n_controls": self.amplitudes.shape[1],
            "bounds": [self.u_min, self.u_max],
            "amplitudes": self.amplitudes.ravel().tolist(),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "ControlSchedule":
        amps = np.asarray(d["amplitudes"], dtype=float).reshape(d["n_pieces"], d["n_controls"])
        return cls(amps, d["total_time"], *d["bounds"])

    @classmethod
    def from_theta(cls, theta, n_pieces: int, total_time=20.0, u_min=-10.0, u_max=10.0) -> "ControlSchedule":
        return cls(np.asarray(theta, dtype=float).reshape(n_pieces, -1), total_time, u_min, u_max)


def propagate_batch(system: SpinChainSystem, amplitudes: np.ndarray, dt: float) -> np.ndarray:
    """Propagators for a stack of schedules: amplitudes (..., N, M) -> (..., d, d). No checks."""
    hs = system.h0 + np.tensordot(amplitudes, system.controls, axes=([-1], [0]))
    return ordered_product(expm_hermitian_batch(hs, dt))


def propagate(system: SpinChainSystem, schedule: ControlSchedule) -> UnitaryOperator:
    if schedule.amplitudes.shape[1] != system.n_controls:
        raise ValueError(
            f"schedule has {schedule.amplitudes.shape[1]} controls, system has {system.n_controls}"
        )
    return UnitaryOperator(propagate_batch(system, schedule.amplitudes, schedule.dt))
