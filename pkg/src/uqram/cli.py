"""Command-line front end.

Exit codes: 0 success, 1 usage or parse error, 2 validation error,
3 property violation (a checked identity deviates beyond tolerance).
"""

from __future__ import annotations

import argparse
import sys

from .errors import ArgumentError, DegenerateInputError, UsageError, ValidationError
from .experiments import MODES, fuzz_opacity, run_experiment
from .fileformat import PRESETS, parse_protocol_file, preset_text
from .registers import DEFAULT_MAX_DIM

EXIT_OK, EXIT_USAGE, EXIT_VALIDATION, EXIT_VIOLATION = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="uqram", description="Read-only QRAM protocol simulator.")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    run = sub.add_parser("run", help="run a protocol file")
    run.add_argument("file", help="protocol file, or preset:NAME for a built-in preset")
    run.add_argument("--mode", choices=MODES, required=True)
    run.add_argument("--seed", type=int, default=0)
    run.add_argument("--samples", type=int, default=4, help="random memories for opacity-check")
    run.add_argument("--csv", action="store_true", help="emit flat CSV rows instead of JSON")
    run.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM)

    fuzz = sub.add_parser("fuzz", help="randomized opacity campaign")
    fuzz.add_argument("--n", type=int, default=1)
    fuzz.add_argument("--trials", type=int, required=True)
    fuzz.add_argument("--max-queries", type=int, default=3)
    fuzz.add_argument("--seed", type=int, default=0)
    fuzz.add_argument("--q-dim", type=int, default=2)
    fuzz.add_argument("--csv", action="store_true", help="emit per-trial CSV rows")
    fuzz.add_argument("--max-dim", type=int, default=DEFAULT_MAX_DIM)

    preset = sub.add_parser("preset", help="print a built-in protocol file")
    preset.add_argument("name", choices=PRESETS)
    return parser


def _read_protocol(path: str) -> str:
    if path.startswith("preset:"):
        return preset_text(path.split(":", 1)[1])
    try:
        with open(path, encoding="utf-8") as fh:
            return fh.read()
    except OSError as exc:
        raise UsageError(f"cannot read {path}: {exc.strerror}") from None


def _execute(args) -> int:
    if args.command == "preset":
        sys.stdout.write(preset_text(args.name))
        return EXIT_OK
    if args.command == "fuzz":
        report = fuzz_opacity(args.n, args.trials, args.max_queries, args.seed, args.q_dim, args.max_dim)
    else:
        pf = parse_protocol_file(_read_protocol(args.file), max_dim=args.max_dim)
        report = run_experiment(pf, args.mode, args.seed, args.samples)
    sys.stdout.write(report.to_csv() if args.csv else report.to_json())
    return EXIT_OK if report.passed else EXIT_VIOLATION


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
        return _execute(args)
    except (ValidationError, DegenerateInputError) as exc:
        print(f"uqram: validation error: {exc}", file=sys.stderr)
        return EXIT_VALIDATION
    except ArgumentError as exc:
        print(f"uqram: error: {exc}", file=sys.stderr)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
