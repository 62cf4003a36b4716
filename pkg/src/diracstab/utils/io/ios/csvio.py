"""Provides class :class:`CsvIo`.
"""

import io
import pandas as pd
from diracstab.utils.io.io import Io, IoException


class CsvIoException(IoException):
    pass


class CsvIo(Io):
    """CSV tables: scans, spectra, profiles and convergence studies.

    The dumped and loaded dict has two keys:

    * ``"table"``: :obj:`pandas.DataFrame`.
    * ``"meta"``: :obj:`dict` written as ``# key=value`` lines above the header.
      Values are read back as strings.

    Floats are written with 17 significant digits, so equal tables give
    byte-identical files.
    """

    SUFFIXES = ("csv",)
    ERROR = CsvIoException

    FLOAT_FORMAT = "%.17g"

    def read(self, stream):
        meta, body = {}, []
        for line in stream:
            if not body and line.startswith("#"):
                key, _, value = line[1:].strip().partition("=")
                meta[key.strip()] = value.strip()
            else:
                body.append(line)
        table = pd.read_csv(io.StringIO("".join(body)), keep_default_na=False, na_values=[""])
        return {"meta": meta, "table": table}

    def write(self, data, stream):
        table = data.get("table")
        if not isinstance(table, pd.DataFrame):
            raise CsvIoException(f'data["table"] must be a pandas.DataFrame, not {type(table)}')
        for key, value in (data.get("meta") or {}).items():
            stream.write(f"# {key}={value}\n")
        table.to_csv(stream, index=False, float_format=CsvIo.FLOAT_FORMAT, lineterminator="\n")
