#!/usr/bin/env python3
"""Blast-wave benchmark at two Knudsen numbers (rarefied and near-fluid).

    python scripts/run_blast.py [--paper-scale] [--out out/blast]
"""

import argparse
import json
import time
from pathlib import Path

from kinuq.bench.config import ExperimentConfig
from kinuq.bench.runner import RunManifest, solve_case, write_fields_csv


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("out/blast"))
    ap.add_argument("--paper-scale", action="store_true")
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    for eps in (1e-1, 1e-4):
        sub = args.out / f"eps{eps:g}"
        sub.mkdir(exist_ok=True)
        cfg = ExperimentConfig(case="blast", eps=eps, t_final=0.35,
                               paper_scale=args.paper_scale, out_dir=str(sub))
        for solver in ("hybrid", "full_kinetic", "full_fluid"):
            t0 = time.perf_counter()
            res = solve_case(cfg, solver=solver)
            wall = time.perf_counter() - t0
            manifest = RunManifest(config={**cfg.to_dict(), "solver": solver},
                                   phases={"solve": wall}, model_runs=1)
            write_fields_csv(sub / f"{solver}.csv", res, manifest.content_hash())
            print(f"eps={eps:g} {solver}: {wall:.2f}s")
        spec = {"figure": "profile-triptych",
                "inputs": [str(sub / f"{s}.csv")
                           for s in ("full_kinetic", "hybrid", "full_fluid")],
                "labels": ["kinetic", "hybrid", "fluid"],
                "output": str(sub / "blast_profiles.png"),
                "title": f"Blast wave, eps={eps:g}"}
        (sub / "figure_spec.json").write_text(json.dumps(spec, indent=2))


if __name__ == "__main__":
    main()
