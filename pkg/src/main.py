"""Entry point: ``python -m src.main <subcommand> ...``."""
import logging
import sys

from src.cli.commands import LOG_FORMAT, run
from src.config.settings import settings


# Configure logging; subcommands add the run-directory log file once it exists
logging.basicConfig(
    format=LOG_FORMAT,
    level=settings.log_level.upper(),
    handlers=[logging.StreamHandler(sys.stdout)],
)
logger = logging.getLogger(__name__)


def main():
    """Main entry point."""
    try:
        sys.exit(run(sys.argv[1:]))
    except KeyboardInterrupt:
        logger.info("Stopped by user")
        sys.exit(130)
    except Exception as e:
        logger.error(f"Fatal error: {e}", exc_info=True)
        sys.exit(1)


if __name__ == "__main__":
    main()
