"""Regenerate every figure preset into an output directory.

Usage::

    python3 scripts/run_figures.py --out results --trials 1000 --threads 4
"""
import argparse
import sys
import time
from pathlib import Path

from armimo.harness import PRESETS, emit, figure_preset, metadata, run_scenario


def main(argv=None):
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="results")
    ap.add_argument("--names", nargs="*", default=sorted(PRESETS))
    ap.add_argument("--trials", type=int, help="override Monte Carlo trials where the preset uses them")
    ap.add_argument("--threads", type=int, default=1)
    ap.add_argument("--seed", type=int)
    args = ap.parse_args(argv)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    for name in args.names:
        sc = figure_preset(name).replace(threads=args.threads)
        if args.trials is not None and sc.trials:
            sc = sc.replace(trials=args.trials)
        if args.seed is not None:
            sc = sc.replace(master_seed=args.seed)
        t0 = time.perf_counter()
        rows = run_scenario(sc)
        meta = metadata(sc)
        emit(rows, "csv", out / f"{name}.csv", meta)
        emit(rows, "json", out / f"{name}.json", meta)
        print(f"{name}: {len(rows)} rows in {time.perf_counter() - t0:.1f} s", file=sys.stderr)
    return 0


if __name__ == "__main__":
    sys.exit(main())
