"""Command-line entry point: ``zlab <subcommand> --config <path>``."""

from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .errors import ZlabError

COMMANDS = ("simulate", "picard", "compare", "norms", "scatter")
VERIFY = ("symbols", "lp", "estimates")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(
        prog="zlab",
        description="Radial Zakharov-type system: solvers, normal-form operators and checks.",
        epilog="Any config key can be overridden with an environment variable "
               "ZLAB_<KEY>, for example ZLAB_DT=0.005.")
    sub = p.add_subparsers(dest="command", required=True)

    def common(sp):
        sp.add_argument("--config", required=True, type=Path, help="key = value config file")
        sp.add_argument("--out", type=Path, default=None, help="output directory")
        sp.add_argument("--seed", type=int, default=None, help="override the config seed")
        sp.add_argument("--threads", type=int, default=1, help="worker threads")

    for name in COMMANDS:
        common(sub.add_parser(name))
    verify = sub.add_parser("verify")
    verify.add_argument("target", choices=VERIFY)
    common(verify)
    return p


def _error(exc: BaseException, code: int) -> int:
    record = {"error": type(exc).__name__, "message": str(exc), "exit_code": code}
    key = getattr(exc, "key", None)
    if key is not None:
        record["key"] = key
    witness = getattr(exc, "witness", None)
    if witness is not None:
        record["witness"] = witness
    print(json.dumps(record, sort_keys=True), file=sys.stderr)
    return code


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    subcommand = args.command if args.command != "verify" else f"verify {args.target}"
    from dataclasses import replace

    from . import runner_io

    try:
        text = args.config.read_text()
    except OSError as exc:
        return _error(exc, 2)
    try:
        cfg = runner_io.parse_config(text, subcommand)
        if args.seed is not None:
            cfg = replace(cfg, seed=args.seed)
        if args.threads < 1:
            raise runner_io.ConfigError("--threads must be >= 1", key="threads")
        out = args.out or Path("runs") / subcommand.replace(" ", "_")
        result = runner_io.run(subcommand, cfg, out, threads=args.threads)
    except ZlabError as exc:
        return _error(exc, exc.exit_code)
    except (ArithmeticError, FloatingPointError, ValueError) as exc:
        return _error(exc, 3)
    for line in result.lines:
        print(line)
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
