"""Logging setup."""
import logging

PREFIX = "[%(asctime)s: %(levelname)s/%(name)s]:"
COLORS = {
    logging.DEBUG: 34,
    logging.INFO: 32,
    logging.WARNING: 33,
    logging.ERROR: 31,
}


class ColoredFormatter(logging.Formatter):
    """Formatter coloring the prefix by level."""

    def __init__(self):
        super().__init__(f"{PREFIX} %(message)s")
        self.by_level = {
            level: logging.Formatter(f"\x1b[{color}m{PREFIX}\x1b[0m %(message)s")
            for level, color in COLORS.items()
        }

    def format(self, record):
        formatter = self.by_level.get(record.levelno)
        if formatter is None:
            return super().format(record)
        return formatter.format(record)


def setup_logger():
    """Set up flattrace logger."""
    logger = logging.getLogger("flattrace")
    logger.setLevel(logging.DEBUG)
    handler = logging.StreamHandler()
    handler.setLevel(logging.DEBUG)
    handler.setFormatter(ColoredFormatter())
    logger.addHandler(handler)
