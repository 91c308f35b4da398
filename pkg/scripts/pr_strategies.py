"""Grid versus bound (and guess) p_r on shared encoders, one chart for p_r and one for J_d.

    python3 scripts/pr_strategies.py --family thermal
    python3 scripts/pr_strategies.py --family blended --w 0.99
"""
from __future__ import annotations

import argparse
from dataclasses import replace
from pathlib import Path

from qaemix.chart import emit_chart
from qaemix.experiment import DEFAULT_GRIDS, ExperimentConfig, compare_strategies
from qaemix.qae import ReferenceStrategy


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--family", choices=("thermal", "werner", "blended"), default="thermal")
    p.add_argument("--qubits", type=int, choices=(2, 4), default=2)
    p.add_argument("--w", type=float, default=0.5)
    p.add_argument("--state-seed", type=int, default=0, help="pure component of the blended family")
    p.add_argument("--replicates", type=int, default=3)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--quick", action="store_true", help="50 ES iterations, one replicate")
    p.add_argument("--out", type=Path, default=None)
    args = p.parse_args()

    out = args.out or Path("runs") / f"{args.family}_{args.qubits}q_pr_w{args.w:g}"
    half = args.qubits // 2
    cfg = ExperimentConfig(
        family=args.family, values=DEFAULT_GRIDS[args.family], n_a=half, n_b=half, w=args.w,
        reference=ReferenceStrategy("mix", "grid"), state_seed=args.state_seed,
        replicates=1 if args.quick else args.replicates, master_seed=args.seed, workers=args.workers,
        out_dir=str(out),
    )
    if args.quick:
        cfg.es = replace(cfg.es, max_iterations=50)
    records, csv_path = compare_strategies(cfg)
    for r in records:
        if r.row_kind == "mean":
            print(f"{r.param_name}={r.param_value:g} {r.strategy:9s} p_r={r.p_r_used:.3f} J_d={r.j_d:.4f}")
    for col in ("p_r_used", "j_d"):
        emit_chart(csv_path, "param_value", [col], out / f"{col}.svg", bound_column=None, group_column="strategy",
                   title=f"{args.qubits}-qubit {args.family}, w={args.w:g}")
    print(f"wrote {csv_path}")


if __name__ == "__main__":
    main()
