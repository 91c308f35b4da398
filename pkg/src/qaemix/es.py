"""Evolution strategy with momentum, used to train the encoder controls.

Each iteration draws NP Gaussian variations eps_i, evaluates the objective
at clamp(theta + delta * eps_i), forms the score-weighted estimate
sum_i Phi_i eps_i / (NP delta), folds it into a momentum buffer and takes an
ascent step. Variates come from Philox streams addressed by
(seed, iteration, individual), so results do not depend on evaluation order.
"""
from __future__ import annotations

import json
import logging
from dataclasses import asdict, dataclass, field, replace
from pathlib import Path
from typing import Callable

import numpy as np

log = logging.getLogger(__name__)

_NOISE_STREAM = 0
_INIT_STREAM = 1


@dataclass
class EsConfig:
    population: int = 40
    delta: float = 0.01
    lr: float = 0.5
    momentum: float = 0.9
    decay: float = 0.98
    decay_period: int = 100
    max_iterations: int = 1500
    window: int = 200
    tolerance: float = 1e-6
    seed: int = 0
    u_min: float = -10.0
    u_max: float = 10.0
    baseline: str = "mean"

    def __post_init__(self):
        if self.population < 2:
            raise ValueError("population must be at least 2")
        if not self.delta > 0:
            raise ValueError("delta must be positive")
        if not self.lr > 0:
            raise ValueError("learning rate must be positive")
        if not 0.0 <= self.momentum < 1.0:
            raise ValueError("momentum must lie in [0, 1)")
        if not self.u_min <= self.u_max:
            raise ValueError("bounds must be ordered")
        if self.baseline not in ("none", "mean"):
            raise ValueError(f"unknown fitness baseline {self.baseline!r}")
        if self.decay_period < 1 or self.window < 1 or self.max_iterations < 0:
            raise ValueError("periods must be positive and max_iterations non-negative")

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def from_dict(cls, d: dict) -> "EsConfig":
        return cls(**d)


class TrainingAborted(RuntimeError):
    def __init__(self, message: str, trace: "TrainingTrace"):
        super().__init__(message)
        self.trace = trace


def _generator(seed: int, stream: int, iteration: int, individual: int) -> np.random.Generator:
    counter = np.array([0, individual, iteration, stream], dtype=np.uint64)
    return np.random.Generator(np.random.Philox(key=seed, counter=counter))


def variations(seed: int, iteration: int, population: int, dim: int) -> np.ndarray:
    """The (NP, dim) standard-normal draws used at ``iteration``."""
    return np.stack(
        [_generator(seed, _NOISE_STREAM, iteration, i).standard_normal(dim) for i in range(population)]
    )


def init_theta(config: EsConfig, dim: int) -> np.ndarray:
    rng = _generator(config.seed, _INIT_STREAM, 0, 0)
    return config.u_min + rng.random(dim) * (config.u_max - config.u_min)


def _evaluate(objective, points: np.ndarray, batched: bool) -> np.ndarray:
    if batched:
        scores = np.asarray(objective(points), dtype=float).reshape(len(points))
    else:
        scores = np.array([float(objective(p)) for p in points])
    if np.any(np.isnan(scores)):
        raise FloatingPointError("objective returned NaN")
    return scores


def _weighted_sum(scores: np.ndarray, eps: np.ndarray, config: EsConfig, delta: float) -> np.ndarray:
    if config.baseline == "mean":
        # sum_i (Phi_i - mean) eps_i has expectation (NP - 1) delta grad
        return (scores - scores.mean()) @ eps / ((config.population - 1) * delta)
    return scores @ eps / (config.population * delta)


def estimate_gradient(
    objective: Callable,
    theta: np.ndarray,
    config: EsConfig,
    iteration: int = 0,
    delta: float | None = None,
    batched: bool = False,
) -> tuple[np.ndarray, np.ndarray]:
    """Score-weighted gradient estimate and the population scores.

    With ``config.baseline == "mean"`` the population mean score is
    subtracted first and the sum divided by (NP - 1) delta, which keeps the
    estimate unbiased while removing the |Phi| / (delta sqrt(NP)) noise floor.
    ``"none"`` is the raw sum_i Phi_i eps_i / (NP delta).
    """
    delta = config.delta if delta is None else delta
    theta = np.asarray(theta, dtype=float)
    eps = variations(config.seed, iteration, config.population, theta.size)
    mutants = np.clip(theta + delta * eps, config.u_min, config.u_max)
    scores = _evaluate(objective, mutants, batched)
    return _weighted_sum(scores, eps, config, delta), scores


@dataclass
class EsState:
    theta: np.ndarray
    velocity: np.ndarray
    delta: float
    iteration: int = 0


def step(state: EsState, gradient: np.ndarray, config: EsConfig) -> EsState:
    """Momentum update, ascent step, clamp; decay delta at each period boundary."""
    velocity = config.momentum * state.velocity + (1.0 - config.momentum) * gradient
    theta = np.clip(state.theta + config.lr * velocity, config.u_min, config.u_max)
    iteration = state.iteration + 1
    delta = state.delta * config.decay if iteration % config.decay_period == 0 else state.delta
    return EsState(theta, velocity, delta, iteration)


@dataclass
class TrainingTrace:
    records: list[dict] = field(default_factory=list)
    theta_star: np.ndarray | None = None
    best_phi: float = -np.inf
    best_iteration: int = -1
    stopped: str = ""

    def append(self, record: dict) -> None:
        if self.records and record["iteration"] <= self.records[-1]["iteration"]:
            raise ValueError("trace iterations must increase")
        self.records.append(record)

    def column(self, name: str) -> np.ndarray:
        return np.array([r.get(name, np.nan) for r in self.records], dtype=float)

    def write_jsonl(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            for r in self.records:
                fh.write(json.dumps(r, sort_keys=True) + "\n")

    @classmethod
    def read_jsonl(cls, path) -> "TrainingTrace":
        trace = cls()
        for line in Path(path).read_text(encoding="utf-8").splitlines():
            if line.strip():
                trace.append(json.loads(line))
        return trace


def train(
    objective: Callable,
    config: EsConfig,
    dim: int,
    batched: bool = False,
    monitor: Callable[[np.ndarray, int], dict] | None = None,
) -> tuple[np.ndarray, TrainingTrace]:
    """Maximize ``objective`` over the box [u_min, u_max]^dim.

    Stops after ``max_iterations`` updates, or once the best score has
    improved by less than ``tolerance`` over the last ``window`` iterations.
    Returns the best mean vector seen, not the last one. ``monitor`` may
    add fields to each trace record; it never affects the search.
    """
    state = EsState(init_theta(config, dim), np.zeros(dim), config.delta)
    trace = TrainingTrace(theta_star=state.theta.copy())
    best_history: list[float] = []

    def record(theta: np.ndarray, score: float, it: int) -> None:
        rec = {"iteration": it, "phi": float(score), "delta": state.delta}
        if monitor is not None:
            rec.update(monitor(theta, it))
        trace.append(rec)
        if score > trace.best_phi:
            trace.best_phi = float(score)
            trace.best_iteration = it
            trace.theta_star = theta.copy()
        best_history.append(trace.best_phi)

    try:
        while True:
            it = state.iteration
            if it >= config.max_iterations:
                score = _evaluate(objective, state.theta[None, :], batched)[0]
                record(state.theta, score, it)
                trace.stopped = "max_iterations"
                break
            eps = variations(config.seed, it, config.population, dim)
            mutants = np.clip(state.theta + state.delta * eps, config.u_min, config.u_max)
            scores = _evaluate(objective, np.vstack([state.theta[None, :], mutants]), batched)
            record(state.theta, scores[0], it)
            if it >= config.window and best_history[-1] - best_history[-1 - config.window] < config.tolerance:
                trace.stopped = "converged"
                break
            gradient = _weighted_sum(scores[1:], eps, config, state.delta)
            state = step(state, gradient, config)
    except (FloatingPointError, ArithmeticError, ValueError) as exc:
        trace.stopped = f"aborted: {exc}"
        raise TrainingAborted(str(exc), trace) from exc
    log.debug("ES stopped (%s) after %d iterations, best %.6f", trace.stopped, state.iteration, trace.best_phi)
    return trace.theta_star, trace


def with_seed(config: EsConfig, seed: int) -> EsConfig:
    return replace(config, seed=int(seed))
