"""
Command-line entry point for the co-authorship recommender
"""
import sys
from typing import Optional, Sequence

from cli.commands import run
from config import settings
from utils.exceptions import AuthorLookupError, CoauthorNetError
from logs.log import logger


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Run one command and map failures onto the exit-code contract

    Returns:
        0 success, 1 internal error, 2 I/O or configuration, 3 lookup, 4 verification
    """
    logger.debug("Starting %s v%s", settings.APP_NAME, settings.APP_VERSION)
    try:
        return run(argv)
    except AuthorLookupError as exc:
        logger.error("%s", exc)
        if exc.suggestions:
            print("closest matches: " + ", ".join(exc.suggestions), file=sys.stderr)
        return exc.exit_code
    except CoauthorNetError as exc:
        logger.error("%s", exc)
        return exc.exit_code
    except Exception as exc:
        logger.exception("Unexpected failure: %s", exc)
        return 1


if __name__ == "__main__":
    sys.exit(main())
