"""Command-line entry point: one subcommand per experiment mode."""

from __future__ import annotations

import argparse
import json
import sys
import traceback
from pathlib import Path

from ..errors import KinuqError
from .config import ExperimentConfig, load_config
from . import runner


def _add_common(p: argparse.ArgumentParser):
    p.add_argument("--config", type=Path, help="YAML experiment config")
    p.add_argument("--seed", type=int, help="override master seed")
    p.add_argument("--workers", type=int, help="sample-evaluation workers")
    p.add_argument("--paper-scale", action="store_true",
                   help="use the full-scale resolutions instead of desk scale")
    p.add_argument("--out", type=Path, help="output directory")


def _build_config(args) -> ExperimentConfig:
    cfg = load_config(args.config) if args.config else ExperimentConfig()
    if args.seed is not None:
        cfg.seed = args.seed
    if args.workers is not None:
        cfg.workers = args.workers
    if args.paper_scale:
        cfg.paper_scale = True
    if args.out is not None:
        cfg.out_dir = str(args.out)
    return cfg


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(prog="kinuq",
                                 description="kinetic/fluid benchmark runner")
    sub = ap.add_subparsers(dest="command", required=True)
    for name in ("run-deterministic", "run-mc", "run-mlmc", "run-bifi",
                 "run-trifi", "make-reference", "timing"):
        _add_common(sub.add_parser(name))

    args = ap.parse_args(argv)
    try:
        cfg = _build_config(args)
        out = Path(cfg.out_dir)
        if args.command == "run-deterministic":
            res = runner.run_deterministic(cfg)
            print(f"wrote {out / 'fields.csv'} ({res['wall']:.2f}s)")
        elif args.command == "run-mc":
            runner.run_mc(cfg)
            print(f"wrote {out / 'mc_fields.csv'}")
        elif args.command == "run-mlmc":
            runner.run_mlmc(cfg)
            print(f"wrote {out / 'mlmc_fields.csv'}")
        elif args.command == "run-bifi":
            res = runner.run_multifidelity(cfg, tri=False)
            print(f"wrote {out / 'bifi_convergence.csv'}; errors {res['errors']}")
        elif args.command == "run-trifi":
            res = runner.run_multifidelity(cfg, tri=True)
            print(f"wrote {out / 'trifi_convergence.csv'}; errors {res['errors']}")
        elif args.command == "make-reference":
            ref = runner.make_reference(cfg)
            print("reference cached" if not ref["cached"] else "reference reused")
        elif args.command == "timing":
            res = runner.run_timing(cfg)
            print(f"speedup {res['speedup']:.2f}")
        return 0
    except KinuqError as exc:
        _write_error(args, exc)
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except Exception as exc:                      # noqa: BLE001
        _write_error(args, exc)
        print(f"internal error: {exc}", file=sys.stderr)
        traceback.print_exc()
        return 2


def _write_error(args, exc) -> None:
    out = Path(getattr(args, "out", None) or "out")
    try:
        out.mkdir(parents=True, exist_ok=True)
        (out / "error.json").write_text(json.dumps(
            {"error": str(exc), "type": type(exc).__name__}))
    except OSError:
        pass


if __name__ == "__main__":
    sys.exit(main())
