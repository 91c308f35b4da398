"""J_d versus the state parameter for w in {0, 0.5, 1}, trash-clone reference.

The bound is drawn as a dashed line, so points above it beat any pure reference.

    python3 scripts/w_sweep.py --family thermal --out runs/thermal_w
    python3 scripts/w_sweep.py --family werner --qubits 4 --workers 4
"""
from __future__ import annotations

import argparse
from dataclasses import replace
from pathlib import Path

from qaemix.chart import emit_chart
from qaemix.experiment import DEFAULT_GRIDS, ExperimentConfig, run_sweep, write_csv
from qaemix.qae import ReferenceStrategy


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--family", choices=("thermal", "werner"), default="thermal")
    p.add_argument("--qubits", type=int, choices=(2, 4), default=2)
    p.add_argument("--weights", type=float, nargs="+", default=[0.0, 0.5, 1.0])
    p.add_argument("--replicates", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="50 ES iterations, one replicate")
    p.add_argument("--out", type=Path, default=None)
    args = p.parse_args()

    out = args.out or Path("runs") / f"{args.family}_{args.qubits}q_w"
    half = args.qubits // 2
    records = []
    for w in args.weights:
        cfg = ExperimentConfig(
            family=args.family, values=DEFAULT_GRIDS[args.family], n_a=half, n_b=half, w=w,
            reference=ReferenceStrategy("trash"), replicates=1 if args.quick else args.replicates,
            master_seed=args.seed, workers=args.workers, out_dir=str(out / f"w{w:g}"),
        )
        if args.quick:
            cfg.es = replace(cfg.es, max_iterations=50)
        recs, _ = run_sweep(cfg)
        records += recs
        for r in recs:
            if r.row_kind == "mean":
                print(f"w={w:g} {r.param_name}={r.param_value:g}: J_d={r.j_d:.4f} bound={r.bound:.4f}")
    csv_path = write_csv(records, out / "all.csv")
    svg = emit_chart(csv_path, "param_value", ["j_d"], out / "j_d.svg", group_column="w",
                     title=f"{args.qubits}-qubit {args.family}, trash-clone reference")
    print(f"wrote {csv_path} and {svg}")


if __name__ == "__main__":
    main()
