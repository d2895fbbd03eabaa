"""Command-line entry point: ``heisenlab <command> [--config path] [--out dir] [--no-cache] [--jobs k]``.

Exit status: 0 when every audit passes, 2 on chain or embedding violations
(or any failed expectation or check), 1 on usage and configuration errors.
"""

from __future__ import annotations

import argparse
import logging
import os
import sys

from heisenlab import __version__
from heisenlab.config import COMMANDS, ConfigError, load_config, parse_config
from heisenlab.runner import EXIT_USAGE, run

OUT_ENV = "HEISENLAB_OUT"
DEFAULT_OUT = "heisenlab-out"

log = logging.getLogger("heisenlab")


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="heisenlab", description="Smoothness audits for the Heisenberg conjugation representation.")
    parser.add_argument("--version", action="version", version=f"heisenlab {__version__}")
    parser.add_argument("command", choices=COMMANDS)
    parser.add_argument("--config", help="JSON run configuration (defaults apply when omitted)")
    parser.add_argument("--out", help=f"output directory (else ${OUT_ENV}, the config 'out' field, or {DEFAULT_OUT})")
    parser.add_argument("--no-cache", action="store_true", help="recompute everything and store nothing")
    parser.add_argument("--jobs", type=int, default=1, help="worker processes (default 1)")
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s %(name)s: %(message)s")
    if args.jobs < 1:
        print("heisenlab: error: --jobs must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    try:
        cfg = load_config(args.config, args.command) if args.config else parse_config({}, args.command)
    except ConfigError as exc:
        print(f"heisenlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    out = args.out or os.environ.get(OUT_ENV) or cfg.out or DEFAULT_OUT
    try:
        status, report = run(cfg, out, jobs=args.jobs, use_cache=not args.no_cache)
    except ValueError as exc:
        # grid or family parameters that only fail once a family is built
        print(f"heisenlab: error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    audit = report["audit"]
    print(f"{cfg.command}: {'passed' if audit['passed'] else 'FAILED'}; "
          f"{len(audit['violations'])} violations, {len(audit['mismatches'])} mismatches, "
          f"{len(audit['failed_checks'])} failed checks; report in {out}")
    return status


if __name__ == "__main__":
    sys.exit(main())
