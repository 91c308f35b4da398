"""Experiment orchestration: configs, single runs, sweeps, strategy comparison, replay."""
from __future__ import annotations

import csv
import hashlib
import json
import logging
import math
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

import numpy as np

from . import __version__
from .control import ControlSchedule, SpinChainSystem, propagate, propagate_batch
from .es import EsConfig, TrainingAborted, TrainingTrace, train
from .qae import (
    DEFAULT_PR_GRID,
    QaeProblem,
    ReferenceStrategy,
    compress,
    phi_terms_batch,
)
from .qinfo import entropy_batch
from .states import StateFamilySpec

log = logging.getLogger(__name__)

SCHEMA_VERSION = 1
CSV_MAGIC = f"# qaemix-results schema={SCHEMA_VERSION}"

RESULT_COLUMNS = (
    "row_kind",
    "family",
    "param_name",
    "param_value",
    "n_qubits",
    "n_a",
    "n_b",
    "w",
    "strategy",
    "replicate",
    "seed",
    "p_r_used",
    "j_pure",
    "j_qmi",
    "j_e",
    "j_d",
    "phi",
    "bound",
    "iterations",
    "wall_seconds",
    "status",
    "error",
)

METRIC_COLUMNS = ("p_r_used", "j_pure", "j_qmi", "j_e", "j_d", "phi", "bound", "iterations", "wall_seconds")

DEFAULT_GRIDS = {
    "thermal": [round(0.2 * k, 1) for k in range(1, 11)],
    "werner": [round(-1.0 + 0.2 * k, 1) for k in range(11)],
    "blended": [round(0.1 * k, 1) for k in range(11)],
}


@dataclass
class ScheduleShape:
    total_time: float = 20.0
    n_pieces: int = 100
    u_min: float = -10.0
    u_max: float = 10.0


def default_es(n_qubits: int, **overrides) -> EsConfig:
    """Population 40 / 1500 iterations for 2 qubits, 50 / 3000 beyond."""
    base = EsConfig(population=40, max_iterations=1500) if n_qubits <= 2 else EsConfig(
        population=50, max_iterations=3000
    )
    return replace(base, **overrides)


@dataclass
class ExperimentConfig:
    family: str = "thermal"
    values: list[float] = field(default_factory=lambda: [1.0])
    n_a: int = 1
    n_b: int = 1
    w: float = 0.5
    reference: ReferenceStrategy = field(default_factory=ReferenceStrategy)
    es: EsConfig | None = None
    schedule: ScheduleShape = field(default_factory=ScheduleShape)
    state_seed: int = 0
    replicates: int = 3
    master_seed: int = 0
    workers: int = 1
    fidelity: str = "squared"
    probe_every: int = 25
    out_dir: str | None = None

    def __post_init__(self):
        if isinstance(self.reference, dict):
            ref = dict(self.reference)
            if "candidates" in ref:
                ref["candidates"] = tuple(ref["candidates"])
            self.reference = ReferenceStrategy(**ref)
        if isinstance(self.es, dict):
            self.es = EsConfig.from_dict(self.es)
        if isinstance(self.schedule, dict):
            self.schedule = ScheduleShape(**self.schedule)
        if self.es is None:
            self.es = default_es(self.n_qubits, u_min=self.schedule.u_min, u_max=self.schedule.u_max)
        self.values = [float(v) for v in self.values]
        if not self.values:
            raise ValueError("parameter grid is empty")
        if self.replicates < 1:
            raise ValueError("replicates must be >= 1")
        if self.fidelity not in ("squared", "root"):
            raise ValueError(f"unknown fidelity convention {self.fidelity!r}")
        if (self.es.u_min, self.es.u_max) != (self.schedule.u_min, self.schedule.u_max):
            raise ValueError("ES bounds must match the control bounds")
        for v in self.values:
            self.state_spec(v)

    @property
    def n_qubits(self) -> int:
        return self.n_a + self.n_b

    def state_spec(self, value: float) -> StateFamilySpec:
        return StateFamilySpec(self.family, self.n_qubits, float(value), self.state_seed)

    def to_dict(self) -> dict:
        d = asdict(self)
        d["reference"]["candidates"] = list(self.reference.candidates)
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        known = {f.name for f in fields(cls)}
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        return cls.from_dict(json.loads(Path(path).read_text(encoding="utf-8")))

    def save(self, path) -> None:
        Path(path).write_text(json.dumps(self.to_dict(), indent=2, sort_keys=True), encoding="utf-8")


def derive_seed(master_seed: int, family: str, value: float, replicate: int) -> int:
    """Stable per-point seed, so extending a grid leaves existing points untouched."""
    key = f"{int(master_seed)}|{family}|{float(value)!r}|{int(replicate)}".encode()
    return int.from_bytes(hashlib.sha256(key).digest()[:8], "big") >> 1


@dataclass
class ResultRecord:
    family: str
    param_name: str
    param_value: float
    n_qubits: int
    n_a: int
    n_b: int
    w: float
    strategy: str
    replicate: int | str
    seed: int | str
    p_r_used: float | None = None
    j_pure: float = math.nan
    j_qmi: float = math.nan
    j_e: float = math.nan
    j_d: float = math.nan
    phi: float = math.nan
    bound: float = math.nan
    iterations: int | float = 0
    wall_seconds: float = 0.0
    status: str = "ok"
    error: str = ""
    row_kind: str = "run"

    def as_row(self) -> dict:
        d = asdict(self)
        return {k: ("" if d[k] is None else d[k]) for k in RESULT_COLUMNS}


@dataclass
class RunOutput:
    record: ResultRecord
    trace: TrainingTrace
    schedule: ControlSchedule | None
    trained_j_pure: float | None = None


class EncoderObjective:
    """Phi(w) as a function of flattened control amplitudes, evaluated for a whole population."""

    def __init__(self, problem: QaeProblem, system: SpinChainSystem, shape: ScheduleShape):
        self.problem = problem
        self.system = system
        self.shape = shape
        self.dt = shape.total_time / shape.n_pieces
        self.s_rho0 = float(entropy_batch(problem.rho0.matrix))

    @property
    def dim(self) -> int:
        return self.shape.n_pieces * self.system.n_controls

    def unitaries(self, thetas: np.ndarray) -> np.ndarray:
        thetas = np.atleast_2d(thetas)
        amps = thetas.reshape(len(thetas), self.shape.n_pieces, self.system.n_controls)
        return propagate_batch(self.system, amps, self.dt)

    def terms(self, thetas: np.ndarray):
        return phi_terms_batch(self.problem, self.unitaries(thetas), self.s_rho0)

    def __call__(self, thetas: np.ndarray) -> np.ndarray:
        return self.terms(thetas)[0]

    def schedule(self, theta: np.ndarray) -> ControlSchedule:
        s = self.shape
        return ControlSchedule.from_theta(theta, s.n_pieces, s.total_time, s.u_min, s.u_max)


def _problem(config: ExperimentConfig, value: float) -> QaeProblem:
    rho0 = config.state_spec(value).build()
    return QaeProblem(config.n_a, config.n_b, rho0, config.w, config.fidelity)


def _base_record(config: ExperimentConfig, value: float, replicate, seed, strategy: str) -> ResultRecord:
    spec = config.state_spec(value)
    return ResultRecord(
        family=config.family,
        param_name=spec.param_name,
        param_value=float(value),
        n_qubits=config.n_qubits,
        n_a=config.n_a,
        n_b=config.n_b,
        w=config.w,
        strategy=strategy,
        replicate=replicate,
        seed=seed,
    )


def _fill(record: ResultRecord, result) -> ResultRecord:
    for k, v in result.metrics().items():
        setattr(record, k, v)
    return record


def train_encoder(config: ExperimentConfig, value: float, seed: int):
    """Steps 1-6: build rho0, train U_e(theta) on Phi(w). Returns (problem, objective, theta*, trace)."""
    problem = _problem(config, value)
    system = SpinChainSystem.heisenberg(config.n_qubits)
    objective = EncoderObjective(problem, system, config.schedule)
    es_cfg = replace(config.es, seed=seed)
    probe_strategy = config.reference

    def monitor(theta: np.ndarray, it: int) -> dict:
        u = objective.unitaries(theta)
        _, jp, jq = phi_terms_batch(problem, u, objective.s_rho0)
        rec = {"j_pure": float(jp[0]), "j_qmi": float(jq[0])}
        if config.probe_every and it % config.probe_every == 0:
            rec["j_d"] = compress(problem, u[0], probe_strategy).j_d
        return rec

    theta, trace = train(objective, es_cfg, objective.dim, batched=True, monitor=monitor)
    return problem, objective, theta, trace


def run_single(
    config: ExperimentConfig,
    value: float | None = None,
    replicate: int = 0,
    seed: int | None = None,
    trace_path=None,
) -> RunOutput:
    """The full train-then-decode procedure for one grid point and replicate."""
    value = config.values[0] if value is None else float(value)
    seed = derive_seed(config.master_seed, config.family, value, replicate) if seed is None else seed
    record = _base_record(config, value, replicate, seed, config.reference.label)
    start = time.perf_counter()
    try:
        problem, objective, theta, trace = train_encoder(config, value, seed)
    except TrainingAborted as exc:
        record.status, record.error = "failed", str(exc)
        if trace_path:
            exc.trace.write_jsonl(trace_path)
        return RunOutput(record, exc.trace, None)
    schedule = objective.schedule(theta)
    u_e = propagate(objective.system, schedule)
    # the guessed p_r uses J_pure of the returned (best) candidate
    trained_jp = float(objective.terms(theta)[1][0])
    result = compress(problem, u_e, config.reference, trained_j_pure=trained_jp)
    _fill(record, result)
    record.iterations = len(trace.records) - 1
    record.wall_seconds = time.perf_counter() - start
    if trace_path:
        trace.write_jsonl(trace_path)
    return RunOutput(record, trace, schedule, trained_jp)


def compare_point(config: ExperimentConfig, value: float, replicate: int, seed: int | None = None,
                  trace_path=None) -> list[RunOutput]:
    """Train once, then resolve p_r by grid, bound and guess on the same encoder."""
    value = float(value)
    seed = derive_seed(config.master_seed, config.family, value, replicate) if seed is None else seed
    start = time.perf_counter()
    strategies = [
        ReferenceStrategy("mix", "grid", candidates=tuple(config.reference.candidates or DEFAULT_PR_GRID)),
        ReferenceStrategy("mix", "bound"),
        ReferenceStrategy("mix", "guess"),
    ]
    try:
        problem, objective, theta, trace = train_encoder(config, value, seed)
    except TrainingAborted as exc:
        outs = []
        for s in strategies:
            rec = _base_record(config, value, replicate, seed, s.label)
            rec.status, rec.error = "failed", str(exc)
            outs.append(RunOutput(rec, exc.trace, None))
        return outs
    if trace_path:
        trace.write_jsonl(trace_path)
    schedule = objective.schedule(theta)
    u_e = propagate(objective.system, schedule)
    trained_jp = float(objective.terms(theta)[1][0])
    elapsed = time.perf_counter() - start
    outs = []
    for s in strategies:
        rec = _fill(_base_record(config, value, replicate, seed, s.label),
                    compress(problem, u_e, s, trained_j_pure=trained_jp))
        rec.iterations = len(trace.records) - 1
        rec.wall_seconds = elapsed
        outs.append(RunOutput(rec, trace, schedule, trained_jp))
    return outs


def aggregate(records: list[ResultRecord]) -> list[ResultRecord]:
    """mean / min / max rows over replicates, per (parameter value, strategy)."""
    groups: dict[tuple, list[ResultRecord]] = {}
    for r in records:
        if r.row_kind == "run" and r.status == "ok":
            groups.setdefault((r.param_value, r.strategy), []).append(r)
    out = []
    for (_, _), rs in groups.items():
        for kind, fn in (("mean", np.mean), ("min", np.min), ("max", np.max)):
            agg = replace(rs[0], row_kind=kind, replicate=kind, seed="")
            for col in METRIC_COLUMNS:
                vals = [getattr(r, col) for r in rs if getattr(r, col) is not None]
                setattr(agg, col, float(fn(vals)) if vals else None)
            out.append(agg)
    return out


def write_csv(records: list[ResultRecord], path) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", newline="", encoding="utf-8") as fh:
        fh.write(CSV_MAGIC + "\n")
        writer = csv.DictWriter(fh, fieldnames=RESULT_COLUMNS, lineterminator="\n")
        writer.writeheader()
        for r in records:
            writer.writerow(r.as_row())
    return path


def read_csv(path) -> list[dict]:
    with open(path, newline="", encoding="utf-8") as fh:
        lines = [ln for ln in fh if not ln.startswith("#")]
    return list(csv.DictReader(lines))


def _point_task(args):
    kind, config, value, replicate, trace_path = args
    if kind == "compare":
        return compare_point(config, value, replicate, trace_path=trace_path)
    return [run_single(config, value, replicate, trace_path=trace_path)]


def _run_points(config: ExperimentConfig, kind: str) -> list[RunOutput]:
    out_dir = Path(config.out_dir) if config.out_dir else None
    tasks = []
    for value in config.values:
        for rep in range(config.replicates):
            trace_path = None
            if out_dir is not None:
                (out_dir / "traces").mkdir(parents=True, exist_ok=True)
                trace_path = out_dir / "traces" / f"{config.family}_{value:g}_r{rep}.jsonl"
            tasks.append((kind, config, value, rep, trace_path))
    if config.workers > 1:
        with ProcessPoolExecutor(max_workers=config.workers) as pool:
            chunks = list(pool.map(_point_task, tasks))
    else:
        chunks = [_point_task(t) for t in tasks]
    return [o for chunk in chunks for o in chunk]


def _finish(config: ExperimentConfig, outputs: list[RunOutput], stem: str, started: float):
    records = [o.record for o in outputs]
    records = records + aggregate(records)
    csv_path = None
    if config.out_dir:
        out_dir = Path(config.out_dir)
        csv_path = write_csv(records, out_dir / f"{stem}.csv")
        write_manifest(config, outputs, out_dir / f"{stem}_manifest.json", time.perf_counter() - started)
    return records, csv_path


def run_sweep(config: ExperimentConfig):
    """run_single over every grid value and replicate; returns (records, csv path or None)."""
    started = time.perf_counter()
    return _finish(config, _run_points(config, "single"), "sweep", started)


def compare_strategies(config: ExperimentConfig):
    started = time.perf_counter()
    return _finish(config, _run_points(config, "compare"), "compare_pr", started)


def write_manifest(config: ExperimentConfig, outputs: list[RunOutput], path, wall_seconds: float) -> Path:
    runs = []
    for o in outputs:
        r = o.record
        runs.append(
            {
                "record": asdict(r),
                "value": r.param_value,
                "replicate": r.replicate,
                "seed": r.seed,
                "strategy": r.strategy,
                "trained_j_pure": o.trained_j_pure,
                "schedule": o.schedule.to_dict() if o.schedule is not None else None,
            }
        )
    manifest = {
        "schema_version": SCHEMA_VERSION,
        "versions": {
            "qaemix": __version__,
            "numpy": np.__version__,
            "python": platform.python_version(),
        },
        "config": config.to_dict(),
        "wall_seconds": wall_seconds,
        "runs": runs,
    }
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    path.write_text(json.dumps(manifest, indent=1, sort_keys=True), encoding="utf-8")
    return path


def _strategy_from_label(label: str, base: ReferenceStrategy) -> ReferenceStrategy:
    if label in ("trash", "pure"):
        return ReferenceStrategy(label)
    source = label.split("-", 1)[1]
    if source in ("grid", "bound", "guess"):
        return ReferenceStrategy("mix", source, candidates=base.candidates)
    return ReferenceStrategy("mix", "fixed", p_r=float(source))


def replay_manifest(path) -> list[tuple[float, float]]:
    """Recompute J_d for every stored run: list of (recorded, replayed)."""
    manifest = json.loads(Path(path).read_text(encoding="utf-8"))
    if manifest.get("schema_version") != SCHEMA_VERSION:
        raise ValueError(f"unsupported manifest schema {manifest.get('schema_version')}")
    config = ExperimentConfig.from_dict(manifest["config"])
    system = SpinChainSystem.heisenberg(config.n_qubits)
    pairs = []
    for run in manifest["runs"]:
        if run["schedule"] is None:
            continue
        problem = _problem(config, run["value"])
        u_e = propagate(system, ControlSchedule.from_dict(run["schedule"]))
        strategy = _strategy_from_label(run["strategy"], config.reference)
        result = compress(problem, u_e, strategy, trained_j_pure=run["trained_j_pure"])
        pairs.append((run["record"]["j_d"], result.j_d))
    return pairs
