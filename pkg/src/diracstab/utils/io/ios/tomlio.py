"""Provides class :class:`TomlIo`.
"""

import toml
from diracstab.utils.io.io import Io, IoException, plain


class TomlIoException(IoException):
    pass


class TomlIo(Io):
    """TOML run configs. TOML has no null, so ``None`` values are left out
    and read back as missing keys."""

    SUFFIXES = ("toml",)
    ERROR = TomlIoException

    def read(self, stream):
        return toml.load(stream)

    def write(self, data, stream):
        toml.dump({k: v for k, v in plain(data).items() if not v is None}, stream)
