"""Command line: ``entromap run`` and ``entromap synth``."""

from __future__ import annotations

import argparse
import logging
import sys
from pathlib import Path

from . import __version__
from .ingest import IngestError
from .pipeline import PipelineConfig, run_pipeline
from .synth import write_dataset


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="entromap", description=__doc__)
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="build networks, modules and indicators per stage")
    run.add_argument("--prices", type=Path, required=True, help="date,ticker,close CSV")
    run.add_argument("--universe", type=Path, required=True, help="ticker,st_flag CSV")
    run.add_argument("--stages", type=Path, required=True, help="stage definition file")
    run.add_argument("--industries", type=Path, help="ticker,industry CSV (optional)")
    run.add_argument("--out", type=Path, required=True, help="output directory")
    run.add_argument("--seed", type=int, default=42)
    run.add_argument("--folds", type=int, default=10)
    run.add_argument("--restarts", type=int, default=10)
    run.add_argument("--top-k", type=int, default=5)

    synth = sub.add_parser("synth", help="write the seeded synthetic dataset")
    synth.add_argument("--out", type=Path, required=True)
    synth.add_argument("--seed", type=int, default=7)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.command == "synth":
        for path in write_dataset(args.out, args.seed).values():
            print(path)
        return 0
    config = PipelineConfig(prices=args.prices, universe=args.universe, stages=args.stages,
                            industries=args.industries, out=args.out, seed=args.seed, folds=args.folds,
                            restarts=args.restarts, top_k=args.top_k)
    try:
        summary = run_pipeline(config)
    except (IngestError, OSError) as exc:
        print(f"entromap: error: {exc}", file=sys.stderr)
        return 2
    for s in summary.stages:
        line = f"{s.code}: {s.status}"
        if s.error:
            line += f" ({s.phase}: {s.error})"
        print(line)
    return 0 if summary.ok else 1


if __name__ == "__main__":
    sys.exit(main())
