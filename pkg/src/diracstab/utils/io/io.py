"""Provides :class:`Io`, the single entry point for every file diracstab
reads or writes: run configs, JSON reports and CSV tables.
"""

import fcntl
import math
from abc import ABCMeta, abstractmethod
from functools import lru_cache
from pathlib import Path
import numpy as np
import diracstab.utils.io.ios as ios_package
from diracstab.utils.load import suffix_registry
from diracstab.utils.exception import DiracStabException


class IoException(DiracStabException):
    pass


def plain(value, strict=False):
    """Converts numpy scalars, arrays and tuples to builtin types.

    Dicts and lists are converted recursively; other values pass through.

    Args:
        value: Value to convert.
        strict (:obj:`bool`): Replace ``nan`` and infinities by ``None``.
    """
    if isinstance(value, dict):
        return {str(k): plain(v, strict) for k, v in value.items()}
    if isinstance(value, (list, tuple, np.ndarray)):
        return [plain(v, strict) for v in value]
    if isinstance(value, np.generic):
        value = value.item()
    if strict and isinstance(value, float) and not math.isfinite(value):
        return None
    return value


class Io(metaclass=ABCMeta):
    """Formatted file access.

    A format is a subclass defined in a module of :mod:`ios`. It lists its
    suffixes in ``SUFFIXES``, names its exception in ``ERROR`` and
    implements :meth:`read` and :meth:`write` on an open text stream.

    Loads hold a shared ``fcntl`` lock, dumps an exclusive one, so a
    collector writing a file never interleaves with a reader of it.
    """

    SUFFIXES = ()
    """:obj:`tuple` of :obj:`str`: Handled suffixes without dot."""

    ERROR = IoException
    """:obj:`type`: Exception raised for malformed content."""

    def __init__(self, path):
        """
        Args:
            path (:obj:`pathlib.Path`): Path to file.

        Raises:
            :class:`TypeError`
        """
        if not isinstance(path, Path):
            raise TypeError(f"path must be a pathlib.Path, not {type(path)}")
        if path.exists() and not path.is_file():
            raise TypeError(f'path "{path}" must be a file')
        self._path = path

    @property
    def path(self):
        """:obj:`pathlib.Path`: Path to file."""
        return self._path

    @abstractmethod
    def read(self, stream):
        """Parses ``stream``.

        Returns:
            :obj:`dict`.
        """

    @abstractmethod
    def write(self, data, stream):
        """Writes ``data`` to ``stream``."""

    def blocking_load(self):
        """Loads the file under a shared lock.

        Returns:
            :obj:`dict`.

        Raises:
            :class:`IoException`
        """
        if not self.path.exists():
            raise IoException(f'File "{self.path}" does not exist')
        try:
            with open(self.path, "r", newline="") as stream:
                fcntl.flock(stream.fileno(), fcntl.LOCK_SH)
                try:
                    result = self.read(stream)
                finally:
                    fcntl.flock(stream.fileno(), fcntl.LOCK_UN)
        except IoException:
            raise
        except Exception as e:
            raise self.ERROR(f'Cannot load from "{self.path}":\n{e}') from e
        if not isinstance(result, dict):
            raise self.ERROR(f'"{self.path}" does not hold a table of keys')
        return result

    def blocking_dump(self, data):
        """Replaces the file contents under an exclusive lock.

        Parent directories are created.

        Args:
            data (:obj:`dict`): Data to dump.

        Raises:
            :class:`TypeError`
            :class:`IoException`
        """
        if not isinstance(data, dict):
            raise TypeError(f"data must be a dict, not {type(data)}")
        try:
            self.path.parent.mkdir(parents=True, exist_ok=True)
            with open(self.path, "a+", newline="") as stream:
                fcntl.flock(stream.fileno(), fcntl.LOCK_EX)
                try:
                    stream.seek(0)
                    stream.truncate(0)
                    self.write(data, stream)
                    stream.flush()
                finally:
                    fcntl.flock(stream.fileno(), fcntl.LOCK_UN)
        except IoException:
            raise
        except Exception as e:
            raise self.ERROR(f'Cannot dump to "{self.path}":\n{e}') from e

    @staticmethod
    @lru_cache(maxsize=None)
    def registry():
        """:obj:`dict`: Lower case suffix (with dot) to format class."""
        return suffix_registry(ios_package, Io)

    @staticmethod
    def suffixes():
        """Returns all supported suffixes.

        Returns:
            :obj:`dict` mapping suffix (with dot) to class name.
        """
        return {suffix: cls.__name__ for suffix, cls in Io.registry().items()}

    @staticmethod
    def has_io(suffix):
        """Returns ``True`` if a format handles ``suffix``.

        Args:
            suffix (:obj:`str`): Return of ``pathlib.Path.suffix``.

        Raises:
            :class:`TypeError`
            :class:`ValueError`
        """
        if not isinstance(suffix, str):
            raise TypeError(f"suffix must be a str, not {type(suffix)}")
        if not suffix:
            return False
        if not suffix.startswith("."):
            raise ValueError("suffix must be a return of pathlib.Path.suffix")
        return suffix.lower() in Io.registry()

    @staticmethod
    def get_io(path):
        """Returns the format object for ``path``.

        Raises:
            :class:`TypeError`
            :class:`IoException`
        """
        if not isinstance(path, Path):
            raise TypeError(f"path must be a Path, not {type(path)}")
        if not Io.has_io(path.suffix):
            raise IoException(f'Unsupported suffix "{path.suffix}" of "{path}"')
        return Io.registry()[path.suffix.lower()](path)
