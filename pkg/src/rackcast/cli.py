"""``rackcast`` command line: generate, train, evaluate, forecast.

Exit codes: 0 success, 1 usage or configuration error, 2 data error,
3 internal invariant violation. Failures print one line to stderr::

    error: <ErrorClass>: <message>
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from pathlib import Path

from . import pipeline
from .config import RunConfig
from .errors import ConfigError, DataError, InvariantError, RackError

log = logging.getLogger("rackcast")

EXIT_OK, EXIT_CONFIG, EXIT_DATA, EXIT_INVARIANT = 0, 1, 2, 3


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage problems through the single-line channel."""

    def error(self, message):
        raise ConfigError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="rackcast", description=__doc__.splitlines()[0])
    parser.add_argument("-v", "--verbose", action="store_true", help="log progress to stderr")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)

    def common(p):
        p.add_argument("--config", default="acceptance",
                       help="JSON run config, or 'acceptance' for the shipped seeded config")
        p.add_argument("--output-dir", default=None,
                       help=f"run directory (overrides ${pipeline.OUTPUT_DIR_ENV} and the config)")
        return p

    gen = common(sub.add_parser("generate", help="write the synthetic dataset as CSV"))
    gen.add_argument("--out", default=None, help="CSV path (default <output-dir>/data.csv)")
    common(sub.add_parser("train", help="fit the rack and the selector"))
    common(sub.add_parser("evaluate", help="score a trained rack on the test split"))
    fc = common(sub.add_parser("forecast", help="forecast new rows with a trained rack"))
    fc.add_argument("--input", required=True, help="CSV of rows to forecast (same columns as the data)")
    fc.add_argument("--out", default=None, help="forecast CSV (default <output-dir>/forecast.csv)")
    sub.add_parser("show-config", help="print the resolved config as JSON").add_argument(
        "--config", default="acceptance")
    return parser


def load_config(spec: str) -> RunConfig:
    if spec == "acceptance":
        return pipeline.shipped_config()
    return RunConfig.load(spec)


def run(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s", stream=sys.stderr)
    if args.command is None:
        parser.print_help(sys.stderr)
        raise ConfigError("a command is required")
    cfg = load_config(args.config)
    if args.command == "show-config":
        sys.stdout.write(cfg.dumps())
        return EXIT_OK

    out_dir = pipeline.resolve_output_dir(cfg, args.output_dir)
    if args.command == "generate":
        path = pipeline.cmd_generate(cfg, Path(args.out) if args.out else out_dir / "data.csv")
        print(path)
    elif args.command == "train":
        pipeline.cmd_train(cfg, out_dir)
        print(out_dir)
    elif args.command == "evaluate":
        report = pipeline.cmd_evaluate(cfg, out_dir)
        summary = {"rack": report["rack"]["accuracy"],
                   "best_single": {report["best_single_model"]:
                                   report["models"][report["best_single_model"]]["accuracy"]},
                   "intermittent_baseline": report["baselines"]["intermittent"]["accuracy"]}
        print(json.dumps(summary, sort_keys=True))
    elif args.command == "forecast":
        out = Path(args.out) if args.out else out_dir / "forecast.csv"
        print(pipeline.cmd_forecast(cfg, out_dir, Path(args.input), out))
    return EXIT_OK


def exit_code(exc: BaseException) -> int:
    if isinstance(exc, InvariantError):
        return EXIT_INVARIANT
    if isinstance(exc, ConfigError):
        return EXIT_CONFIG
    if isinstance(exc, DataError):
        return EXIT_DATA
    return EXIT_INVARIANT


def main(argv=None) -> int:
    try:
        return run(argv)
    except RackError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return exit_code(exc)
    except OSError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
