"""Command line: ``fstrm analyze | bench | generate``.

Exit codes: 0 success, 2 input/output failure, 3 invalid configuration,
4 internal numerical failure.
"""
from __future__ import annotations

import argparse
import json
import sys

import numpy as np

from .config import ConfigError, load_config
from .errors import CsvFormatError, NumericalFailure, ValidationError
from .pipeline import bench, emit_report, format_bench, run_pipeline
from .signals import PROFILES, generate, profile_spec, write_csv

EXIT_OK, EXIT_IO, EXIT_CONFIG, EXIT_NUMERIC = 0, 2, 3, 4


def _overrides(pairs) -> dict:
    out = {}
    for item in pairs or []:
        if "=" not in item:
            raise ConfigError(item, "expected key=value")
        k, v = item.split("=", 1)
        out[k.strip()] = v.strip()
    return out


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="fstrm", description="Short-time Root-MUSIC tone analysis")
    sub = ap.add_subparsers(dest="command", required=True)

    a = sub.add_parser("analyze", help="estimate and track tones in a signal")
    src = a.add_mutually_exclusive_group(required=True)
    src.add_argument("--input", help="CSV path or preset name (" + ", ".join(sorted(PROFILES)) + ")")
    src.add_argument("--preset", choices=sorted(PROFILES), help="synthetic rig profile")
    a.add_argument("--config", help="key = value config file")
    a.add_argument("--method", choices=("fstrm", "classical", "periodogram"))
    a.add_argument("--out", help="report path (default: stdout)")
    a.add_argument("--format", choices=("json", "csv"), default="json")
    a.add_argument("--seed", type=int, default=0, help="seed for preset noise and phases")
    a.add_argument("--no-timing", action="store_true", help="zero timings for reproducible output")
    a.add_argument("--set", action="append", metavar="KEY=VALUE", help="override a config key")

    b = sub.add_parser("bench", help="per-frame timing versus frame length")
    b.add_argument("--sizes", default="1024,2048,4096")
    b.add_argument("--frames", type=int, default=50)
    b.add_argument("--classical-frames", type=int, default=5)
    b.add_argument("--no-classical", action="store_true")
    b.add_argument("--config")
    b.add_argument("--set", action="append", metavar="KEY=VALUE")
    b.add_argument("--json", action="store_true", help="print rows as JSON")

    g = sub.add_parser("generate", help="write a synthetic profile to CSV")
    g.add_argument("--preset", required=True, choices=sorted(PROFILES))
    g.add_argument("--out", required=True)
    g.add_argument("--seed", type=int, default=0)
    g.add_argument("--duration", type=float, default=1.0)
    g.add_argument("--fs", type=float, default=51200.0)
    return ap


def _analyze(args) -> int:
    overrides = _overrides(args.set)
    if args.method:
        overrides["method"] = args.method
    cfg = load_config(args.config, overrides)
    source = args.preset or args.input
    report = run_pipeline(cfg, source, seed=args.seed)
    if args.out:
        emit_report(report, args.out, args.format, timing=not args.no_timing)
    elif args.format == "json":
        json.dump(report.to_dict(not args.no_timing), sys.stdout, indent=2, sort_keys=True)
        sys.stdout.write("\n")
    else:
        emit_report(report, "/dev/stdout", "csv")
    return EXIT_OK


def _bench(args) -> int:
    cfg = load_config(args.config, _overrides(args.set))
    try:
        sizes = [int(s) for s in args.sizes.split(",") if s.strip()]
    except ValueError:
        raise ConfigError("sizes", f"expected comma-separated integers, got {args.sizes!r}") from None
    rows = bench(cfg, sizes, args.frames, args.classical_frames, classical=not args.no_classical)
    if args.json:
        print(json.dumps([dict(vars(r), speedup=r.speedup) for r in rows], indent=2))
    else:
        print(format_bench(rows))
    return EXIT_OK


def _generate(args) -> int:
    spec = profile_spec(args.preset, seed=args.seed, duration_s=args.duration, fs_hz=args.fs)
    write_csv(args.out, generate(spec), spec.fs_hz)
    return EXIT_OK


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    handler = {"analyze": _analyze, "bench": _bench, "generate": _generate}[args.command]
    try:
        return handler(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (OSError, CsvFormatError) as exc:
        print(f"i/o error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (NumericalFailure, np.linalg.LinAlgError, FloatingPointError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC
    except ValidationError as exc:
        print(f"invalid input: {exc}", file=sys.stderr)
        return EXIT_CONFIG


if __name__ == "__main__":
    sys.exit(main())
