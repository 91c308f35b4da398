"""Training curves for a nearly pure blended state (p0 = 0.99), w = 0.5 versus w = 0.99.

J_d is probed every 25 iterations with the grid-searched mixed reference.

    python3 scripts/high_purity.py --qubits 2
"""
from __future__ import annotations

import argparse
import csv
from dataclasses import replace
from pathlib import Path

from qaemix.chart import emit_chart
from qaemix.experiment import ExperimentConfig, run_single
from qaemix.qae import ReferenceStrategy


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--qubits", type=int, choices=(2, 4), default=2)
    p.add_argument("--p0", type=float, default=0.99)
    p.add_argument("--state-seed", type=int, default=0)
    p.add_argument("--replicate", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="100 ES iterations")
    p.add_argument("--out", type=Path, default=Path("runs/high_purity"))
    args = p.parse_args()

    half = args.qubits // 2
    args.out.mkdir(parents=True, exist_ok=True)
    rows = []
    for w in (0.5, 0.99):
        cfg = ExperimentConfig(family="blended", values=[args.p0], n_a=half, n_b=half, w=w,
                               reference=ReferenceStrategy("mix", "grid"), state_seed=args.state_seed)
        if args.quick:
            cfg.es = replace(cfg.es, max_iterations=100)
        res = run_single(cfg, replicate=args.replicate, trace_path=args.out / f"trace_w{w:g}.jsonl")
        print(f"w={w:g}: final J_d={res.record.j_d:.4f} p_r={res.record.p_r_used} bound={res.record.bound:.4f}")
        rows += [{"iteration": r["iteration"], "w": w, "j_d": r["j_d"], "bound": res.record.bound}
                 for r in res.trace.records if "j_d" in r]
    csv_path = args.out / "curves.csv"
    with open(csv_path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.DictWriter(fh, fieldnames=["iteration", "w", "j_d", "bound"], lineterminator="\n")
        writer.writeheader()
        writer.writerows(rows)
    emit_chart(csv_path, "iteration", ["j_d"], args.out / "curves.svg", group_column="w",
               title=f"{args.qubits}-qubit blended, p0={args.p0:g}")
    print(f"wrote {csv_path}")


if __name__ == "__main__":
    main()
