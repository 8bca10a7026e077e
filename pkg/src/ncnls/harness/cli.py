"""``ncnls <propagator|evolve|scatter|verify> --config <path> [--set key=value ...] [--out <dir>]``.

Exit status: 0 all checks pass, 1 a check failed, 2 configuration or resource error.
"""
from __future__ import annotations

import argparse
import sys

from .._parallel import thread_count
from ..dynamics import LeakError
from ..propagator import ResourceLimitError
from .commands import COMMAND_TABLE
from .config import COMMANDS, ConfigError, load_config

__all__ = ["main", "build_parser", "EXIT_PASS", "EXIT_CHECK_FAILED", "EXIT_CONFIG"]

EXIT_PASS = 0
EXIT_CHECK_FAILED = 1
EXIT_CONFIG = 2


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="ncnls", description="Noncommutative NLS experiments in the Fock basis.")
    p.add_argument("command", choices=COMMANDS)
    p.add_argument("--config", help="key = value file (defaults are used for missing keys)")
    p.add_argument("--set", dest="overrides", action="append", default=[], metavar="KEY=VALUE",
                   help="override one key; repeatable")
    p.add_argument("--out", help="output directory (overrides out_dir)")
    p.add_argument("-q", "--quiet", action="store_true", help="print only the summary line")
    return p


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        thread_count()
        cfg = load_config(args.command, args.config, args.overrides, args.out)
        manifest = COMMAND_TABLE[args.command](cfg)
        path = manifest.write()
    except (ConfigError, ResourceLimitError, LeakError, OSError, ValueError) as exc:
        print(f"ncnls: error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if not args.quiet:
        for c in manifest.checks:
            print(c.line())
    failed = sum(not c.passed for c in manifest.checks)
    print(f"{'PASS' if not failed else 'FAIL'}: {len(manifest.checks) - failed}/{len(manifest.checks)} checks, "
          f"manifest {path}")
    return EXIT_PASS if not failed else EXIT_CHECK_FAILED


if __name__ == "__main__":
    sys.exit(main())
