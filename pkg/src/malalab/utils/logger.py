import logging
import os
from typing import Any, Protocol

DEBUG_ENV = "MALALAB_DEBUG"


class Logger(Protocol):
    def debug(self, msg: str, *args: Any, **kwargs: Any) -> None:
        pass

    def info(self, msg: str, *args: Any, **kwargs: Any) -> None:
        pass

    def warning(self, msg: str, *args: Any, **kwargs: Any) -> None:
        pass


class NoOpLogger:
    def debug(self, msg: str, *args: Any, **kwargs: Any) -> None:
        pass

    def info(self, msg: str, *args: Any, **kwargs: Any) -> None:
        pass

    def warning(self, msg: str, *args: Any, **kwargs: Any) -> None:
        pass


def get_default_logger() -> Logger:
    """Return the ``malalab`` stdlib logger when MALALAB_DEBUG is set, else a no-op."""
    if os.getenv(DEBUG_ENV):
        logger = logging.getLogger("malalab")
        if not logger.handlers:
            handler = logging.StreamHandler()
            handler.setFormatter(
                logging.Formatter("%(asctime)s %(name)s %(levelname)s %(message)s")
            )
            logger.addHandler(handler)
        logger.setLevel(logging.DEBUG)
        return logger
    return NoOpLogger()
