"""
hypoelim - multi-stage hypothesis elimination simulator

Entry point for the command line.
Exit codes: 0 success, 1 domain failure, 2 usage/IO, 3 runtime overrun.
"""
import argparse
import json
import sys
from typing import List, Optional

from pydantic import ValidationError

from cli import experiment_cmds, instance_cmds, run_cmds
from config import settings
from services.errors import HypoElimError, UsageError


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="hypoelim",
        description="Clustering-accelerated multi-stage hypothesis elimination: runs, sweeps and reports",
    )
    subparsers = parser.add_subparsers(dest="command", required=True)

    # ─────────────────────────────────────────────────────────────────────────
    # COMMANDS
    # ─────────────────────────────────────────────────────────────────────────

    instance_cmds.register(subparsers)
    run_cmds.register(subparsers)
    experiment_cmds.register(subparsers)
    return parser


def _report(error: HypoElimError) -> int:
    print(f"[CLI] Error: {error.message}", file=sys.stderr)
    if settings.debug or getattr(error, "diagnostics", None):
        print(json.dumps(error.to_dict(), default=str), file=sys.stderr)
    elif error.technical_detail:
        print(f"[CLI] Detail: {error.technical_detail}", file=sys.stderr)
    return error.exit_code


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.handler(args)
    except HypoElimError as e:
        return _report(e)
    except ValidationError as e:
        return _report(UsageError("invalid arguments", str(e)))


if __name__ == "__main__":
    sys.exit(main())
