"""Command-line entry point: ``qaemix {state,bound,train,sweep,compare-pr,chart,replay}``."""
from __future__ import annotations

import argparse
import json
import logging
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from .experiment import (
    DEFAULT_GRIDS,
    ExperimentConfig,
    ScheduleShape,
    compare_strategies,
    default_es,
    replay_manifest,
    run_single,
    run_sweep,
    write_csv,
    write_manifest,
)
from .qae import ReferenceStrategy, qae_pure_bound
from .states import FAMILIES

PARAM_FLAGS = {"thermal": "beta", "werner": "alpha", "blended": "p0"}


def parse_values(text: str) -> list[float]:
    """``0.5`` or an inclusive range ``start:stop:step``."""
    if ":" not in text:
        return [float(text)]
    parts = [float(p) for p in text.split(":")]
    if len(parts) != 3 or parts[2] <= 0:
        raise argparse.ArgumentTypeError(f"bad range {text!r}; use start:stop:step with step > 0")
    start, stop, step = parts
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    return [round(start + k * step, 10) for k in range(max(n, 0))]


def _common(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", type=Path, help="JSON experiment config; flags override it")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--beta", type=parse_values)
    p.add_argument("--alpha", type=parse_values)
    p.add_argument("--p0", type=parse_values)
    p.add_argument("--na", type=int)
    p.add_argument("--nb", type=int)
    p.add_argument("--w", type=float)
    p.add_argument("--ref", choices=("trash", "pure", "mix"))
    p.add_argument("--pr", help="grid, bound, guess or a fixed float")
    p.add_argument("--seed", type=int, help="master seed")
    p.add_argument("--state-seed", type=int, help="seed for the pure state of blended/haar families")
    p.add_argument("--replicates", type=int)
    p.add_argument("--out", type=Path)
    p.add_argument("--workers", type=int)
    p.add_argument("--fidelity", choices=("squared", "root"))
    p.add_argument("--iterations", type=int, help="override ES max_iterations")
    p.add_argument("--population", type=int, help="override ES population size")
    p.add_argument("--baseline", choices=("none", "mean"), help="ES fitness baseline")
    p.add_argument("--pieces", type=int, help="number of control pieces N")


def build_config(args: argparse.Namespace) -> ExperimentConfig:
    d = ExperimentConfig.load(args.config).to_dict() if args.config else {}
    if args.family:
        d["family"] = args.family
    family = d.get("family", "thermal")
    flag = PARAM_FLAGS.get(family)
    if flag and getattr(args, flag) is not None:
        d["values"] = getattr(args, flag)
    elif "values" not in d:
        d["values"] = DEFAULT_GRIDS.get(family, [0.0])
    for key, attr in (("n_a", "na"), ("n_b", "nb"), ("w", "w"), ("master_seed", "seed"),
                      ("state_seed", "state_seed"), ("replicates", "replicates"),
                      ("workers", "workers"), ("fidelity", "fidelity")):
        if getattr(args, attr, None) is not None:
            d[key] = getattr(args, attr)
    if args.out is not None:
        d["out_dir"] = str(args.out)
    if args.ref or args.pr:
        d["reference"] = ReferenceStrategy.parse(args.ref or "mix", args.pr)
    if args.pieces:
        d["schedule"] = {**d.get("schedule", {}), "n_pieces": args.pieces}
    es_over = {k: v for k, v in (("max_iterations", args.iterations), ("population", args.population),
                                 ("baseline", args.baseline)) if v is not None}
    es = d.pop("es", None)
    config = ExperimentConfig.from_dict(d)
    if es is not None:
        config.es = replace(config.es.__class__.from_dict(es), **es_over)
    elif es_over:
        s: ScheduleShape = config.schedule
        config.es = default_es(config.n_qubits, u_min=s.u_min, u_max=s.u_max, **es_over)
    return config


def _matrix_json(m: np.ndarray) -> dict:
    return {"dim": int(m.shape[0]), "real": m.real.tolist(), "imag": m.imag.tolist()}


def cmd_state(args) -> int:
    config = build_config(args)
    rho = config.state_spec(config.values[0]).build()
    print(json.dumps(_matrix_json(rho.matrix)))
    return 0


def cmd_bound(args) -> int:
    config = build_config(args)
    for v in config.values:
        rho = config.state_spec(v).build()
        print(f"{v:g}\t{qae_pure_bound(rho, config.n_b):.12f}")
    return 0


def cmd_train(args) -> int:
    config = build_config(args)
    out = Path(config.out_dir) if config.out_dir else None
    trace_path = None
    if out:
        out.mkdir(parents=True, exist_ok=True)
        trace_path = out / "trace.jsonl"
    res = run_single(config, trace_path=trace_path)
    if out:
        write_csv([res.record], out / "train.csv")
        write_manifest(config, [res], out / "train_manifest.json", res.record.wall_seconds)
    print(json.dumps(res.record.as_row(), default=str, indent=1))
    return 0 if res.record.status == "ok" else 1


def cmd_sweep(args) -> int:
    config = build_config(args)
    records, path = run_sweep(config)
    _summarize(records, path)
    return 0


def cmd_compare(args) -> int:
    config = build_config(args)
    records, path = compare_strategies(config)
    _summarize(records, path)
    return 0


def _summarize(records, path) -> None:
    for r in records:
        if r.row_kind == "mean":
            pr = "" if r.p_r_used is None else f" p_r={r.p_r_used:.3f}"
            print(f"{r.param_name}={r.param_value:g} {r.strategy}: j_d={r.j_d:.4f} bound={r.bound:.4f}{pr}")
    failed = sum(r.status != "ok" for r in records)
    if failed:
        print(f"{failed} run(s) failed; see the error column", file=sys.stderr)
    if path:
        print(f"wrote {path}")


def cmd_chart(args) -> int:
    from .chart import emit_chart

    emit_chart(args.csv, args.x, args.y, args.output, bound_column=args.bound or None,
               group_column=args.group, title=args.title)
    print(f"wrote {args.output}")
    return 0


def cmd_replay(args) -> int:
    pairs = replay_manifest(args.manifest)
    worst = max((abs(a - b) for a, b in pairs), default=0.0)
    for a, b in pairs:
        print(f"recorded={a:.12f} replayed={b:.12f}")
    print(f"max deviation {worst:.3e}")
    return 0 if worst <= args.tol else 1


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="qaemix", description=__doc__)
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, fn, help_ in (
        ("state", cmd_state, "dump a family member's density matrix as JSON"),
        ("bound", cmd_bound, "print the pure-reference bound"),
        ("train", cmd_train, "train and decode one grid point"),
        ("sweep", cmd_sweep, "sweep a parameter grid"),
        ("compare-pr", cmd_compare, "compare grid/bound/guess p_r on shared encoders"),
    ):
        p = sub.add_parser(name, help=help_)
        _common(p)
        p.set_defaults(func=fn)
    p = sub.add_parser("chart", help="render a CSV as an SVG line chart")
    p.add_argument("csv", type=Path)
    p.add_argument("--x", required=True)
    p.add_argument("--y", required=True, nargs="+")
    p.add_argument("--bound", default="bound", help="dashed overlay column ('' to disable)")
    p.add_argument("--group", help="one line per value of this column, e.g. strategy")
    p.add_argument("--title")
    p.add_argument("-o", "--output", type=Path, required=True)
    p.set_defaults(func=cmd_chart)
    p = sub.add_parser("replay", help="recompute J_d from a run manifest")
    p.add_argument("manifest", type=Path)
    p.add_argument("--tol", type=float, default=1e-9)
    p.set_defaults(func=cmd_replay)
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.WARNING)
    return args.func(args)


if __name__ == "__main__":
    sys.exit(main())
