"""Logging that cooperates with tqdm progress bars."""

import logging
import sys

from tqdm import tqdm

LOG_FORMAT = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
DATE_FORMAT = "%Y-%m-%d %H:%M:%S"


class TqdmLoggingHandler(logging.Handler):
    """Route records through ``tqdm.write`` on stderr.

    The active bar is cleared, the line printed and the bar redrawn. Reports may
    go to stdout, so nothing is ever logged there.
    """

    def emit(self, record: logging.LogRecord) -> None:
        """Write one formatted record above any active progress bar."""
        try:
            tqdm.write(self.format(record), file=sys.stderr)
        except Exception:
            self.handleError(record)


def setup_logging(verbose: bool = False) -> None:
    """Install a single tqdm-aware handler on the root logger.

    ``verbose`` lowers the level to DEBUG. Calling it again replaces the handler.
    """
    handler = TqdmLoggingHandler()
    handler.setFormatter(logging.Formatter(LOG_FORMAT, datefmt=DATE_FORMAT))
    logging.basicConfig(
        level=logging.DEBUG if verbose else logging.INFO, handlers=[handler], force=True
    )
