import argparse
import logging
import sys
from typing import List, Optional

from dotenv import load_dotenv

from rabi import __version__
from rabi.commands import boundary, diagram, ground, scan, semiclassical, verify
from rabi.config import settings
from rabi.errors import EXIT_OK, ConfigValidationError, RabiError
from rabi.models import ParamSpec, Quantity, SweepConfig
from rabi.sweep import SUITES, load_config
from rabi.utils.logger import configure_root

logger = logging.getLogger(__name__)

COMMANDS = (ground, scan, diagram, boundary, semiclassical, verify)


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="key = value config file")
    common.add_argument("--out", help="output directory (overrides the config)")
    common.add_argument("--workers", type=int, help="worker processes (default: RABI_WORKERS or all cores)")
    common.add_argument("--tol", type=float, help="eigensolver tolerance")
    common.add_argument("--analytic", action="store_true", help="add analytic overlays to boundary output")
    common.add_argument("--suite", choices=SUITES, help="verify suite (default: all)")

    parser = argparse.ArgumentParser(prog="rabi", description="Ground-state phase diagrams of the generalized Rabi model")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)
    for module in COMMANDS:
        sp = sub.add_parser(module.NAME, help=module.HELP, parents=[common])
        sp.set_defaults(handler=module.run)
    return parser


def _config_for(args: argparse.Namespace) -> SweepConfig:
    if args.config:
        cfg = load_config(args.config)
    elif args.command == "verify":
        cfg = SweepConfig(base=ParamSpec(omega=Quantity(value=1.0)), out=settings.OUTPUT_DIR)
    else:
        raise ConfigValidationError(f"{args.command} needs --config")

    updates = {"task": args.command}
    if args.out:
        updates["out"] = args.out
    if args.workers is not None:
        if args.workers < 1:
            raise ConfigValidationError("--workers must be at least 1")
        updates["workers"] = args.workers
    if args.tol is not None:
        if args.tol <= 0:
            raise ConfigValidationError("--tol must be positive")
        updates["tol"] = args.tol
    if args.analytic:
        updates["analytic"] = True
    if args.suite:
        updates["suite"] = args.suite
    return cfg.model_copy(update=updates)


def cli_main(argv: Optional[List[str]] = None) -> int:
    """Entry point; returns 0, 1 (verification), 2 (config) or 3 (solver)"""
    load_dotenv()
    parser = build_parser()
    args = parser.parse_args(argv)
    configure_root()
    try:
        cfg = _config_for(args)
        return args.handler(cfg) or EXIT_OK
    except RabiError as e:
        logger.error("%s: %s", type(e).__name__, e.detail)
        print(f"error: {e.detail}", file=sys.stderr)
        return e.exit_code


if __name__ == "__main__":
    sys.exit(cli_main())
