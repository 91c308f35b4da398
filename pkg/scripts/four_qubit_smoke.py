"""One 4-qubit thermal run (beta = 1, w = 0.5, trash clone), then replay its manifest.

    python3 scripts/four_qubit_smoke.py --out runs/smoke4
"""
from __future__ import annotations

import argparse
import time
from pathlib import Path

from qaemix.experiment import ExperimentConfig, replay_manifest, run_single, write_manifest
from qaemix.qae import ReferenceStrategy


def main() -> None:
    p = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("--beta", type=float, default=1.0)
    p.add_argument("--iterations", type=int, default=None, help="override the 3000-iteration cap")
    p.add_argument("--out", type=Path, default=Path("runs/smoke4"))
    args = p.parse_args()

    cfg = ExperimentConfig(family="thermal", values=[args.beta], n_a=2, n_b=2, w=0.5,
                           reference=ReferenceStrategy("trash"), replicates=1)
    if args.iterations is not None:
        cfg.es.max_iterations = args.iterations
    args.out.mkdir(parents=True, exist_ok=True)
    start = time.perf_counter()
    res = run_single(cfg, trace_path=args.out / "trace.jsonl")
    manifest = write_manifest(cfg, [res], args.out / "manifest.json", time.perf_counter() - start)
    r = res.record
    print(f"J_d={r.j_d:.6f} bound={r.bound:.6f} iterations={r.iterations} seconds={r.wall_seconds:.0f}")
    worst = max(abs(a - b) for a, b in replay_manifest(manifest))
    print(f"replay max deviation {worst:.2e}")


if __name__ == "__main__":
    main()
