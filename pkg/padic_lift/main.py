import argparse
import logging
import os
import sys
from typing import List, Optional

# Internal modular imports
from padic_lift.core.config import LOG_FORMAT, settings
from padic_lift.core.exceptions import ExitCode, PadicLiftError
from padic_lift.cli import arithmetic, interpretation
from padic_lift.schemas.schemas import JobSpec, Report
from padic_lift.services.rendering import renderer

logger = logging.getLogger(__name__)

__version__ = "1.0.0"


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="padic-lift",
        description="Lift finite dynamical systems to certified p-adic ball dynamics.",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")

    # flags every subcommand accepts
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--size-limit", type=int, help=f"enumeration cap (default {settings.SIZE_LIMIT})")
    common.add_argument("--json", metavar="OUT", help="write the machine-readable report here")
    common.add_argument("--dot", metavar="OUT", help="DOT file, or directory for multi-panel output")
    verbosity = common.add_mutually_exclusive_group()
    verbosity.add_argument("-v", "--verbose", action="store_true")
    verbosity.add_argument("-q", "--quiet", action="store_true")

    subparsers = parser.add_subparsers(dest="command", required=True)

    # ============ COMMAND REGISTRATION ============

    # Interpretation (encode, certify, synthesize, classify)
    interpretation.register(subparsers, common)

    # Arithmetic dynamics (dcrt, tower, hensel, profinite-check, rigidity)
    arithmetic.register(subparsers, common)

    return parser


def configure_logging(args: argparse.Namespace) -> None:
    level = settings.LOG_LEVEL
    if getattr(args, "verbose", False):
        level = "DEBUG"
    elif getattr(args, "quiet", False):
        level = "WARNING"
    logging.basicConfig(level=level, format=LOG_FORMAT, stream=sys.stderr, force=True)


def _write_json(report: Report, path: Optional[str]) -> None:
    if not path:
        return
    directory = os.path.dirname(path)
    if directory:
        os.makedirs(directory, exist_ok=True)
    with open(path, "w", encoding="utf-8") as fh:
        fh.write(renderer.report_json(report))
    logger.info(f"✅ Report written to {path}")


def _error_report(args: argparse.Namespace, exc: PadicLiftError) -> Report:
    job = JobSpec(command=args.command, size_limit=args.size_limit or settings.SIZE_LIMIT)
    return Report(job=job, results={"error": exc.to_dict()}, exit_code=exc.exit_code)


# ============ GLOBAL ERROR HANDLING ============

def main(argv: Optional[List[str]] = None) -> int:
    """
    Parses the command line, runs one job, prints the text report and returns
    the exit code. Library errors map to their own exit codes.
    """
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_logging(args)
    logger.debug(f"🚀 Running {args.command}")

    try:
        report = args.handler(args)
    except PadicLiftError as e:
        logger.error(f"❌ {type(e).__name__}: {e.detail}")
        report = _error_report(args, e)
        _write_json(report, args.json)
        print(renderer.report_text(report), end="")
        return e.exit_code
    except Exception as e:
        logger.error(f"Unhandled Exception: {str(e)}", exc_info=True)
        return ExitCode.INTERNAL

    _write_json(report, args.json)
    print(renderer.report_text(report), end="")
    return report.exit_code


if __name__ == "__main__":
    sys.exit(main())
