import logging
import sys
import time
from contextlib import ContextDecorator

from decouple import config
from structlog import BoundLogger, PrintLogger, wrap_logger
from structlog.processors import JSONRenderer, TimeStamper

import ozmm.exceptions
from ozmm import utils


class OZLogger:
    """JSON-lines logger for pipeline stages.

    Events below `level` are dropped. With `persist` on, every emitted event
    is also kept in `events` together with the context bound at the time.
    """

    def __init__(self, level=logging.INFO, stream=None, **context):
        # stdout carries CSV and matrix output
        self._logger = wrap_logger(
            PrintLogger(file=stream or sys.stderr),
            wrapper_class=BoundLogger,
            processors=[TimeStamper(fmt="iso"), JSONRenderer(sort_keys=True)],
        )
        self.level = level
        self.persist = False
        self.events = []
        self.bind(**context)

    def _json(self):
        return utils.repr(self, ["level", "persist"])

    def bind(self, **kwargs) -> "OZLogger":
        self._logger = self._logger.bind(**kwargs)
        return self

    def unbind(self, *keys) -> "OZLogger":
        self._logger = self._logger.unbind(*keys)
        return self

    def context(self, action: str = None, bind: dict = None) -> "LoggerContext":
        """Scope for `bind`; with `action`, log `start:<action>` and `finish:<action>` plus duration."""
        return LoggerContext(self, action, bind)

    def log(self, event: str, level=logging.INFO, **kwargs):
        if level < self.level:
            return None
        if self.persist:
            self.events.append(
                dict(level=level, event=event, context=dict(self._logger._context), **kwargs)
            )
        return self._logger.msg(event, level=logging.getLevelName(level), **kwargs)

    def debug(self, event, **kwargs):
        return self.log(event, logging.DEBUG, **kwargs)

    def info(self, event, **kwargs):
        return self.log(event, logging.INFO, **kwargs)

    def warning(self, event, **kwargs):
        return self.log(event, logging.WARNING, **kwargs)

    def error(self, event, **kwargs):
        return self.log(event, logging.ERROR, **kwargs)

    def critical(self, event, **kwargs):
        return self.log(event, logging.CRITICAL, **kwargs)


class LoggerContext(ContextDecorator):
    """Restores the logger's bound context on exit.

    The dict handed out on entry collects values that are bound onto the
    finish event, e.g. budgets known only once a stage has run.
    """

    def __init__(self, log: OZLogger, action: str = None, bind: dict = None):
        self.log = log
        self.action = action
        self.bind = bind or {}
        self.extra = {}
        self._saved = None
        self._start = None

    def __enter__(self):
        self._saved = self.log._logger
        self._start = time.perf_counter()
        self.extra = {}
        self.log.bind(**self.bind)
        if self.action:
            self.log.log(f"start:{self.action}", self.log.level)
        return self.extra

    def __exit__(self, *exc):
        if self.action:
            duration = time.perf_counter() - self._start
            self.log.bind(duration=duration, **self.extra)
            self.log.log(f"finish:{self.action}", self.log.level)
        self.log._logger = self._saved
        self._saved = None
        return False


def setup(logger=None, debug: bool = None):
    """Return `logger`, or a new OZLogger named by OZMM_RUN_NAME.

    `debug` defaults to OZMM_DEBUG; it lowers the level to DEBUG and turns on
    event persistence.
    """
    try:
        if debug is None:
            debug = config("OZMM_DEBUG", default=False, cast=bool)
        if not logger:
            logger = OZLogger(
                level=logging.DEBUG if debug else logging.INFO,
                process=config("OZMM_RUN_NAME", default="ozmm"),
            )
        if debug and isinstance(logger, OZLogger):
            logger.persist = True
    except Exception as e:
        raise ozmm.exceptions.InvalidConfigurationError("Failed to initialize logger.") from e
    return logger
