"""Provides class :class:`JsonIo`.
"""

import json
from diracstab.utils.io.io import Io, IoException, plain


class JsonIoException(IoException):
    pass


class JsonIo(Io):
    """JSON reports and summaries, indented, with a trailing newline.

    Non-finite floats are written as ``NaN``/``Infinity``, which
    :func:`json.load` reads back.
    """

    SUFFIXES = ("json",)
    ERROR = JsonIoException

    def read(self, stream):
        return json.load(stream)

    def write(self, data, stream):
        json.dump(plain(data), stream, indent=4)
        stream.write("\n")
