"""Provides class :class:`YamlIo`.
"""

import yaml
from diracstab.utils.io.io import Io, IoException, plain


class YamlIoException(IoException):
    pass


class YamlIo(Io):
    """YAML run configs. An empty document loads as an empty config."""

    SUFFIXES = ("yaml", "yml")
    ERROR = YamlIoException

    def read(self, stream):
        result = yaml.safe_load(stream)
        return {} if result is None else result

    def write(self, data, stream):
        yaml.safe_dump(plain(data), stream, sort_keys=False, default_flow_style=False)
