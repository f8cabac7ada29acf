import argparse
import logging
import sys

import numpy as np
from pydantic import ValidationError

from . import __version__
from .commands import fit_influence, fit_lsm, s50, simulate, study
from .config import LOG_LEVEL
from .errors import LsadjustError, NumericalError

logger = logging.getLogger("lsadjust")


class _ArgumentParser(argparse.ArgumentParser):
    # Usage errors are input errors: exit 1, leaving 2 for numerical failures
    def error(self, message: str) -> None:
        self.print_usage(sys.stderr)
        self.exit(1, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _ArgumentParser(
        prog="lsadjust",
        description="Latent-space adjusted estimation of social influence",
    )
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    parser.add_argument("--log-level", default=LOG_LEVEL, help=f"Logging level (default: {LOG_LEVEL})")

    # Subcommands
    subparsers = parser.add_subparsers(dest="command", required=True)
    for command in (fit_lsm, fit_influence, simulate, study, s50):
        command.register(subparsers)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        stream=sys.stderr,
        level=args.log_level.upper(),
        format="%(asctime)s %(levelname)s %(name)s: %(message)s",
    )

    try:
        return args.handler(args)
    except LsadjustError as e:
        logger.error("%s", e.detail)
        return e.exit_code
    except (np.linalg.LinAlgError, FloatingPointError) as e:
        logger.error("Numerical failure: %s", e)
        return NumericalError.exit_code
    except ValidationError as e:
        logger.error("Invalid configuration: %s", e)
        return 1
    except OSError as e:
        logger.error("%s", e)
        return 1
