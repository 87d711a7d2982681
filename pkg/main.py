"""
CAT experiment runner - command-line entry point.

    python main.py train --scheme cat --dataset blobs --n 2000 --k 2 --iters 300 --seed 7
    python main.py sweep --dataset mnist --mnist-images ... --sampling-numbers 128 256 512
    python main.py fig1 | eval | compare ...

Exit codes: 0 success, 1 usage error, 2 runtime error.
"""

import argparse
import logging
import sys
from typing import List, Optional

from pydantic import ValidationError as SpecError

from config import settings
from commands import COMMANDS
from commands.common import build_run_spec
from utils.errors import CatError, UsageError

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_RUNTIME = 2

# Configure logging
logging.basicConfig(level=settings.LOG_LEVEL.upper(), format=settings.LOG_FORMAT)
logger = logging.getLogger(__name__)


class CliParser(argparse.ArgumentParser):
    """argparse that raises instead of exiting, so every usage error maps to exit 1"""

    def error(self, message):
        raise UsageError(f"{self.prog}: {message}")


def build_parser() -> CliParser:
    parser = CliParser(prog="cat", description="Case-aware adversarial training experiments")
    subparsers = parser.add_subparsers(dest="command", required=True, parser_class=CliParser)
    for command in COMMANDS:
        command.register(subparsers)
    return parser


def main(argv: Optional[List[str]] = None) -> int:
    try:
        args = build_parser().parse_args(argv)
        spec = build_run_spec(args, args.command)
    except SystemExit as e:
        # --help
        return EXIT_OK if not e.code else EXIT_USAGE
    except UsageError as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except SpecError as e:
        logger.error(f"❌ Invalid run configuration: {e}")
        return EXIT_USAGE

    try:
        return args.handler(spec)
    except UsageError as e:
        logger.error(f"❌ {e}")
        return EXIT_USAGE
    except (CatError, OSError) as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        return EXIT_RUNTIME
    except Exception as e:
        logger.exception(f"❌ Unexpected error: {e}")
        return EXIT_RUNTIME


if __name__ == "__main__":
    sys.exit(main())
