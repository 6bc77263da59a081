#!/usr/bin/env python3
"""
Command-line entry point for the coagulation homogenization workbench.

Subcommands: validate-kernels, cell, micro, macro, compare, zerod.
Exit codes: 0 success, 2 config error, 3 numerical failure, 4 non-convergence.
"""

import argparse
import json
import logging
import sys
from pathlib import Path
from typing import List, Optional

# Add parent directory to path for imports
sys.path.append(str(Path(__file__).parent.parent))

from src.config import settings
from src.config_loader import load_config
from src.errors import WorkbenchError
from src.models import ErrorResponse
from src.orchestrator import SUBCOMMANDS, orchestrate

logger = logging.getLogger("workbench")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="coag-workbench",
        description="Truncated coagulation-fragmentation-diffusion on perforated domains and its homogenized limit",
    )
    parser.add_argument("subcommand", choices=SUBCOMMANDS, help="What to run")
    parser.add_argument("--config", "-c", required=True, help="Path to the JSON run configuration")
    parser.add_argument("--out", "-o", help="Output directory (default: config output_dir or runs/<subcommand>)")
    parser.add_argument("--threads", "-t", type=int, help="Worker threads (overrides the config)")
    parser.add_argument("--quiet", "-q", action="store_true", help="Only warnings and the final status")
    return parser


def configure_logging(quiet: bool) -> None:
    level = logging.WARNING if quiet else getattr(logging, settings.log_level.upper(), logging.INFO)
    logging.basicConfig(level=level, format="%(asctime)s %(levelname)s %(name)s: %(message)s", stream=sys.stderr)


def print_error(error: ErrorResponse) -> None:
    print(error.model_dump_json(indent=2))


def main(argv: Optional[List[str]] = None) -> int:
    args = build_parser().parse_args(argv)
    configure_logging(args.quiet)

    if args.threads is not None and args.threads < 1:
        print_error(ErrorResponse(
            reason="config_error", explanation="--threads must be >= 1", exit_code=2, keys=["threads"],
        ))
        return 2

    try:
        config = load_config(args.config)
        result = orchestrate(args.subcommand, config, out_dir=args.out, threads=args.threads)
    except WorkbenchError as e:
        print_error(ErrorResponse(
            reason=e.reason,
            explanation=str(e),
            exit_code=e.exit_code,
            keys=getattr(e, "keys", []),
        ))
        return e.exit_code
    except ValueError as e:
        logger.debug("Invalid input for %s", args.subcommand, exc_info=True)
        print_error(ErrorResponse(reason="config_error", explanation=str(e), exit_code=2))
        return 2

    if not args.quiet:
        ok = result.exit_code == 0 and result.passed
        status = "✅" if ok else "❌"
        gates = "" if result.passed else " (acceptance gates failed)"
        print(f"{status} {args.subcommand} finished{gates}, artifacts in {result.out_dir}")
        print(json.dumps(result.summary, indent=2, sort_keys=True, default=str))
    return result.exit_code


if __name__ == "__main__":
    sys.exit(main())
