"""Provides :class:`Logger`.

All loggers are children of the ``diracstab`` logger, which gets its
handler from :meth:`Logger.basic_config`.
"""

import sys
import time
import logging


ROOT = "diracstab"


class Logger:
    """Named logger with an optional message context.

    The context, e.g. ``k=3 omega=0.9``, prefixes every message, so that
    output of a scan stays attributable to the point which produced it.
    """

    class DefaultFormatter(logging.Formatter):
        """Colored formatter; plain when ``colored`` is False."""

        FORMAT = "[%(asctime)s - %(name)s - %(levelname)s]\n%(message)s"
        COLORS = {
            logging.DEBUG: "\x1b[38;20m",
            logging.INFO: "\x1b[32;20m",
            logging.WARNING: "\x1b[33;20m",
            logging.ERROR: "\x1b[31;20m",
            logging.CRITICAL: "\x1b[31;1m",
        }
        RESET = "\x1b[0m"

        def __init__(self, colored=True):
            super().__init__(Logger.DefaultFormatter.FORMAT)
            self._colored = colored

        def format(self, record):
            text = super().format(record)
            if not self._colored:
                return text
            return f"{self.COLORS.get(record.levelno, '')}{text}{self.RESET}"

    class Timer:
        """Context manager measuring wall time of a block.

        Created by :meth:`Logger.timed`. After the block exits,
        :py:attr:`elapsed` holds the duration in seconds.
        """

        def __init__(self, logger, label):
            self._logger = logger
            self._label = label
            self._start = None
            self.elapsed = 0.0

        def __enter__(self):
            self._start = time.perf_counter()
            return self

        def __exit__(self, exc_type, exc_value, traceback):
            self.elapsed = time.perf_counter() - self._start
            if exc_type is None:
                self._logger.debug(f"{self._label} took {self.elapsed:.3f} s")

    @staticmethod
    def basic_config(loglevel="INFO", stream=None):
        """Installs the handler of the ``diracstab`` logger.

        Calling it again replaces the handler and the level.

        Args:
            loglevel: :py:mod:`logging` log level.
            stream: Output stream, ``sys.stderr`` if None. Colors are used
                only if it is a terminal.
        """
        stream = sys.stderr if stream is None else stream
        handler = logging.StreamHandler(stream)
        handler.setFormatter(Logger.DefaultFormatter(colored=stream.isatty()))

        root = logging.getLogger(ROOT)
        root.handlers.clear()
        root.addHandler(handler)
        root.setLevel(loglevel)
        root.propagate = False

    def __init__(self, name, context=None):
        """
        Args:
            name (:obj:`str`): Logger name below ``diracstab``.
            context (:obj:`Union[str, None]`): Prefix for every message.
        """
        if not isinstance(name, str):
            raise TypeError(f"name must be a str, not {type(name)}")
        if not context is None and not isinstance(context, str):
            raise TypeError(f"context must be a str, not {type(context)}")

        self._context = context
        self._logger = logging.getLogger(f"{ROOT}.{name}")

    @property
    def name(self):
        """:obj:`str`: Full logger name."""
        return self._logger.name

    @property
    def context(self):
        """:obj:`Union[str, None]`: Message prefix."""
        return self._context

    def timed(self, label):
        """Returns a :class:`Logger.Timer` for a ``with`` block."""
        return Logger.Timer(self, label)

    def log(self, level, msg):
        """Logs ``msg`` at ``level`` with the context prefix."""
        if not self._context is None:
            msg = f"[{self._context}] {msg}"
        self._logger.log(level, msg)

    def debug(self, msg):
        self.log(logging.DEBUG, msg)

    def info(self, msg):
        self.log(logging.INFO, msg)

    def warning(self, msg):
        self.log(logging.WARNING, msg)

    def error(self, msg):
        self.log(logging.ERROR, msg)
