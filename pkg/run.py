import logging
import sys

from padic_lift.main import main as cli_main

logger = logging.getLogger("padic_lift_startup")


def main():
    """
    Process entry point for the padic-lift command line.
    Equivalent to ``python -m padic_lift.main``.
    """
    try:
        sys.exit(cli_main())
    except KeyboardInterrupt:
        logger.error("❌ Interrupted")
        sys.exit(130)


if __name__ == "__main__":
    main()
