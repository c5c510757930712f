#!/usr/bin/env python3
"""Bi- and tri-fidelity convergence sweep on the mixed-regime case; writes
the convergence tables and a figure spec.

    python scripts/multifidelity_sweep.py [--out out/mixed_c]
"""

import argparse
import json
from pathlib import Path

from kinuq.bench.config import ExperimentConfig
from kinuq.bench.runner import run_multifidelity


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", type=Path, default=Path("out/mixed_c"))
    ap.add_argument("--n-low", type=int, default=100)
    ap.add_argument("--k", type=int, nargs="+", default=[3, 5, 10])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args()

    cfg = ExperimentConfig(case="mixed_c", solver="hybrid", t_final=0.2,
                           n_low=args.n_low, k_values=list(args.k),
                           seed=args.seed, out_dir=str(args.out))
    bi = run_multifidelity(cfg, tri=False)
    print("bi-fidelity errors:", bi["errors"], " low-vs-high:", bi["err_low"])
    tri = run_multifidelity(cfg, tri=True)
    print("tri-fidelity errors:", tri["errors"])

    spec = {"figure": "convergence",
            "inputs": [str(args.out / "bifi_convergence.csv"),
                       str(args.out / "trifi_convergence.csv")],
            "output": str(args.out / "fidelity_convergence.png")}
    (args.out / "figure_spec.json").write_text(json.dumps(spec, indent=2))
    print(f"figure spec at {args.out / 'figure_spec.json'}")


if __name__ == "__main__":
    main()
