#!/usr/bin/env python3
"""Deterministic Sod shock tube: hybrid vs full-kinetic vs full-fluid.

Writes one fields CSV per solver plus the hybrid label history, and a
figure spec consumable by `figkit render`.

    python scripts/run_sod.py [--paper-scale] [--out out/sod]
"""

import argparse
import json
import time
from pathlib import Path

from kinuq.bench.config import ExperimentConfig
from kinuq.bench.runner import (
    RunManifest,
    solve_case,
    write_fields_csv,
    write_label_history,
)


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("out/sod"))
    ap.add_argument("--paper-scale", action="store_true")
    ap.add_argument("--eps", type=float, default=1e-4)
    args = ap.parse_args()

    cfg = ExperimentConfig(case="sod", eps=args.eps, t_final=0.15,
                           paper_scale=args.paper_scale,
                           out_dir=str(args.out), label_history=True)
    args.out.mkdir(parents=True, exist_ok=True)

    results = {}
    for solver in ("hybrid", "full_kinetic", "full_fluid"):
        t0 = time.perf_counter()
        kw = {"record_labels": True} if solver == "hybrid" else {}
        res = solve_case(cfg, solver=solver, **kw)
        wall = time.perf_counter() - t0
        manifest = RunManifest(config={**cfg.to_dict(), "solver": solver},
                               phases={"solve": wall},
                               kinetic_fractions=res.get("kinetic_fractions", []),
                               model_runs=1)
        write_fields_csv(args.out / f"{solver}.csv", res, manifest.content_hash())
        (args.out / f"{solver}_manifest.json").write_text(manifest.to_json())
        if solver == "hybrid" and res.get("label_history"):
            write_label_history(args.out / "labels.csv", res["label_history"])
        results[solver] = wall
        print(f"{solver}: {wall:.2f}s")
    print(f"hybrid speedup vs kinetic: {results['full_kinetic'] / results['hybrid']:.2f}")

    spec = {"figure": "profile-triptych",
            "inputs": [str(args.out / f"{s}.csv")
                       for s in ("full_kinetic", "hybrid", "full_fluid")],
            "labels": ["kinetic", "hybrid", "fluid"],
            "output": str(args.out / "sod_profiles.png"),
            "title": "Sod tube, eps=%g" % args.eps}
    (args.out / "figure_spec.json").write_text(json.dumps(spec, indent=2))
    print(f"figure spec at {args.out / 'figure_spec.json'}")


if __name__ == "__main__":
    main()
