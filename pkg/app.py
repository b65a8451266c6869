# app.py
import argparse
import logging
import os
import sys
from typing import List, Optional

from config import settings
from services.errors import ArgumentError, LabError, PropertyViolation

logger = logging.getLogger("rbll_lab")

# Local imports
from commands.router import CommandRouter, ENGINE_CHOICES
from commands.structure import router as structure_router
from commands.functional import router as functional_router
from commands.geometry import router as geometry_router
from models.run_record import RunKind
from services import instance_service, output_service
from services.ledger_service import LedgerService, RunTimer

router = CommandRouter()
router.include_router(structure_router)
router.include_router(functional_router)
router.include_router(geometry_router)

EXIT_USAGE = 1


def configure_logging() -> None:
    """Root logger on stderr (stdout carries results), plus a file when LOG_FILE is set"""
    log_level = settings.LOG_LEVEL.upper()
    numeric_level = getattr(logging, log_level, None)
    if not isinstance(numeric_level, int):
        print(f"Invalid log level: {log_level}, defaulting to INFO", file=sys.stderr)
        numeric_level = logging.INFO

    handlers = [logging.StreamHandler(sys.stderr)]
    if settings.LOG_FILE:
        os.makedirs(os.path.dirname(settings.LOG_FILE) or ".", exist_ok=True)
        handlers.append(logging.FileHandler(settings.LOG_FILE))
    logging.basicConfig(
        level=numeric_level,
        format="%(asctime)s - %(name)s - %(levelname)s - %(message)s",
        handlers=handlers,
        force=True,
    )


class _Parser(argparse.ArgumentParser):
    """argparse that reports usage errors by exception instead of exiting"""

    def error(self, message):
        self.print_usage(sys.stderr)
        raise ArgumentError(message)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--instance", required=True, help="instance file (key=value)")
    common.add_argument("--engine", choices=ENGINE_CHOICES, default=None)
    common.add_argument("--samples", type=int, default=None, help="Monte Carlo sample count")
    common.add_argument("--seed", type=int, default=None)
    common.add_argument("--out", default=None, help="output directory")

    parser = _Parser(prog="rbll", description="Numerical laboratory for the RBLL functional")
    subparsers = parser.add_subparsers(dest="command", parser_class=_Parser)
    for name, command in router.commands.items():
        sub = subparsers.add_parser(name, parents=[common], help=command.help)
        if command.arguments:
            command.arguments(sub)
    return parser


def _ledger(kind: RunKind, instance_name: Optional[str], seed: Optional[int], engine: Optional[str],
            timer: RunTimer, details: dict = None, exit_code: int = 0, error: str = None) -> None:
    if not settings.LEDGER_URL:
        return
    from database import get_db

    db = next(get_db(settings.LEDGER_URL))
    try:
        if exit_code == 0:
            LedgerService.log_run(db, kind, instance_name, seed, engine, timer.elapsed_ms, details)
        else:
            LedgerService.log_failure(db, kind, exit_code, error, instance_name, seed, timer.elapsed_ms)
    except Exception as e:
        # the ledger never changes the outcome of a run
        logger.error(f"Ledger write failed: {e}")
    finally:
        db.close()


def run(argv: List[str] = None) -> int:
    """Parse, dispatch, write outputs; returns the process exit code"""
    configure_logging()
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except ArgumentError:
        return EXIT_USAGE
    except SystemExit as e:
        # --help
        return int(e.code or 0)
    if args.command is None:
        parser.print_usage(sys.stderr)
        return EXIT_USAGE
    if args.samples is not None and args.samples < 1:
        logger.error("--samples must be positive")
        return EXIT_USAGE

    kind = RunKind(args.command)
    instance = None
    timer = RunTimer()
    try:
        with timer:
            instance = instance_service.load_instance(args.instance)
            if args.seed is None and instance.seed is not None:
                args.seed = instance.seed
            logger.info(f"Running {args.command} on {instance.name} (seed={args.seed})")
            result = router.commands[args.command].handler(args, instance)

            out_dir = args.out or os.path.join(settings.OUTPUT_DIR, instance.name)
            output_service.write_outputs(out_dir, args.command, result.rows, result.summary, result.fieldnames)
            print(output_service.summary_line(args.command, result.summary, result.echo))
            if result.violation:
                raise PropertyViolation(result.violation)
    except LabError as e:
        logger.error(f"{args.command} failed: {e}")
        _ledger(kind, instance.name if instance else None, args.seed, args.engine, timer,
                exit_code=e.exit_code, error=str(e))
        return e.exit_code
    except Exception as e:
        logger.exception(f"Unexpected error in {args.command}: {e}")
        _ledger(kind, instance.name if instance else None, args.seed, args.engine, timer, exit_code=2, error=str(e))
        return 2

    _ledger(kind, instance.name, args.seed, result.engine or args.engine, timer,
            details=output_service.plain(result.summary))
    return 0


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
