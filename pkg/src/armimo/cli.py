"""Command line entry point: ``armimo {simulate,det-equiv,pilot-opt,figure}``.

Exit codes: 0 success, 2 configuration error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import sys
from pathlib import Path

from armimo.errors import ArmimoError, ConfigError, UnknownPreset
from armimo.harness import (PRESETS, Sweep, emit, figure_preset, load_config, metadata,
                            run_scenario)

EXIT_OK, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3


def _overrides(sc, args):
    changes = {}
    for name, field in (("seed", "master_seed"), ("trials", "trials"), ("threads", "threads")):
        v = getattr(args, name, None)
        if v is not None:
            changes[field] = v
    return sc.replace(**changes) if changes else sc


def _write(rows, fmt, out, meta):
    emit(rows, fmt, sys.stdout if out in (None, "-") else out, meta)


def cmd_simulate(args):
    sc = _overrides(load_config(args.config), args)
    rows = run_scenario(sc)
    _write(rows, args.format, args.out, metadata(sc))


def cmd_det_equiv(args):
    sc = load_config(args.config)
    rows = run_scenario(sc, analysis_only=True)
    _write(rows, args.format, args.out, metadata(sc))


def cmd_pilot_opt(args):
    sc = load_config(args.config).replace(P_p="optimal")
    if args.sweep:
        sc = sc.replace(sweep=Sweep.parse(args.sweep))
    rows = run_scenario(sc, analysis_only=True)
    _write(rows, args.format, args.out, metadata(sc))


def cmd_figure(args):
    sc = _overrides(figure_preset(args.name), args)
    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    rows = run_scenario(sc)
    meta = metadata(sc)
    emit(rows, "csv", out / f"{args.name}.csv", meta)
    emit(rows, "json", out / f"{args.name}.json", meta)


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="armimo", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)

    def run_opts(sp):
        sp.add_argument("--seed", type=int)
        sp.add_argument("--trials", type=int)
        sp.add_argument("--threads", type=int)

    def out_opts(sp):
        sp.add_argument("--out", default=None, help="output file (stdout if omitted)")
        sp.add_argument("--format", choices=("csv", "json"), default="csv")

    s = sub.add_parser("simulate", help="Monte Carlo plus analysis for a config file")
    s.add_argument("--config", required=True)
    out_opts(s)
    run_opts(s)
    s.set_defaults(func=cmd_simulate)

    s = sub.add_parser("det-equiv", help="deterministic-equivalent SINR only")
    s.add_argument("--config", required=True)
    out_opts(s)
    s.set_defaults(func=cmd_det_equiv)

    s = sub.add_parser("pilot-opt", help="optimal pilot power over a sweep")
    s.add_argument("--config", required=True)
    s.add_argument("--sweep", help="e.g. a=0:0.05:0.95")
    out_opts(s)
    s.set_defaults(func=cmd_pilot_opt)

    s = sub.add_parser("figure", help="run a figure preset")
    s.add_argument("--name", required=True, choices=sorted(PRESETS))
    s.add_argument("--out", required=True, help="output directory")
    run_opts(s)
    s.set_defaults(func=cmd_figure)
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        args.func(args)
    except (ConfigError, UnknownPreset) as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except ArmimoError as exc:
        print(f"{type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
