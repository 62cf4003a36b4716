"""Provides :class:`ScanConfig` and the automatic grid policy.

A config is a flat key/value table, e.g. in TOML:

.. code-block:: TOML

    k = 3
    omega_min = 0.9
    omega_max = 0.98
    count = 3
    spacing = "linear"
    N = "auto"
    L = "auto"
    checks = ["profile", "spectrum", "rescaled"]
"""

import math
from numbers import Integral, Real
from pathlib import Path
import numpy as np
from diracstab.core.numerics import Grid
from diracstab.core.profiles import make_model
from diracstab.utils.io.io import Io
from diracstab.utils.metadata import MetaDataNode, MetaDataError, dontcheck
from diracstab.utils.exception import ConfigurationError


DENSE_LIMIT = 4096
"""int: Largest grid accepted for dense eigensolves."""

CHECKS = ("profile", "spectrum", "rescaled")
"""tuple: Stages of a scan point."""


def auto_grid(eps, n_max=DENSE_LIMIT):
    """Automatic grid for a wave of width ``1/eps``.

    ``L = ceil(30/eps)`` and ``h <= min(0.02/eps, 0.05)``, with ``N`` capped
    at ``n_max``.

    Args:
        eps (:obj:`float`): ``sqrt(m^2 - omega^2)`` in units of ``m = 1``.
        n_max (:obj:`int`): Cap on the number of nodes.

    Returns:
        :class:`Grid`.
    """
    if not eps > 0:
        raise ConfigurationError(f"eps must be positive, not {eps}")
    half_width = float(math.ceil(30.0 / eps))
    step = min(0.02 / eps, 0.05)
    points = int(math.ceil(2.0 * half_width / step)) + 1
    return Grid(half_width, min(points, n_max))


def _is_int(value):
    return isinstance(value, Integral) and not isinstance(value, bool)


def _is_real(value):
    return isinstance(value, Real) and not isinstance(value, bool)


class ScanConfig(MetaDataNode):
    """Run configuration of a scan over frequencies."""

    @staticmethod
    def from_file(path, overrides=None):
        """Loads a config file, applying ``overrides`` on top.

        Args:
            path (:obj:`pathlib.Path`): ``.toml``, ``.yaml`` or ``.json`` file.
            overrides (:obj:`Union[dict, None]`): Values replacing file values;
                ``None`` values are ignored.

        Returns:
            :class:`ScanConfig`.

        Raises:
            :class:`IoException`
            :class:`MetaDataError`
        """
        data = Io.get_io(path).blocking_load()
        if not isinstance(data, dict):
            raise MetaDataError(f'"{path}" must contain a table')
        data.update({k: v for k, v in (overrides or {}).items() if not v is None})
        return ScanConfig(data)

    def to_dict(self):
        """:obj:`dict`: All set values, defaults included."""
        return self.data

    def dump(self, path):
        """Writes the config to a file chosen by suffix."""
        Io.get_io(path).blocking_dump(self.to_dict())

    @property
    def k(self):
        """:obj:`int`: Exponent of the nonlinearity. Default 3."""
        return self._data.get("k", 3)

    @k.setter
    def k(self, value):
        if not _is_int(value):
            raise TypeError(f"k must be an int, not {type(value)}")
        if value < 1:
            raise ValueError(f"k must be at least 1, not {value}")
        self._set("k", int(value))

    @property
    def a(self):
        """:obj:`float`: Leading coefficient. Default 1."""
        return self._data.get("a", 1.0)

    @a.setter
    def a(self, value):
        if not _is_real(value):
            raise TypeError(f"a must be a float, not {type(value)}")
        if not value > 0:
            raise ValueError(f"a must be positive, not {value}")
        self._set("a", float(value))

    @property
    def m(self):
        """:obj:`float`: Mass. Default 1."""
        return self._data.get("m", 1.0)

    @m.setter
    def m(self, value):
        if not _is_real(value):
            raise TypeError(f"m must be a float, not {type(value)}")
        if not value > 0:
            raise ValueError(f"m must be positive, not {value}")
        self._set("m", float(value))

    @property
    def higher_exponents(self):
        """:obj:`list` of :obj:`float`: Exponents of higher terms of ``f``."""
        return list(self._data.get("higher_exponents", []))

    @higher_exponents.setter
    def higher_exponents(self, value):
        if not isinstance(value, list) or not all(_is_real(x) for x in value):
            raise TypeError(f"higher_exponents must be a list of floats, not {value}")
        self._set("higher_exponents", [float(x) for x in value])

    @property
    def higher_coefficients(self):
        """:obj:`list` of :obj:`float`: Coefficients of higher terms of ``f``."""
        return list(self._data.get("higher_coefficients", []))

    @higher_coefficients.setter
    def higher_coefficients(self, value):
        if not isinstance(value, list) or not all(_is_real(x) for x in value):
            raise TypeError(f"higher_coefficients must be a list of floats, not {value}")
        if len(value) != len(self.higher_exponents):
            raise ValueError("higher_coefficients and higher_exponents differ in length")
        self._set("higher_coefficients", [float(x) for x in value])

    @property
    def omegas(self):
        """:obj:`Union[list, None]`: Explicit frequencies."""
        value = self._data.get("omegas")
        return None if value is None else list(value)

    @omegas.setter
    def omegas(self, value):
        if not value is None:
            if not isinstance(value, list) or not value or not all(_is_real(x) for x in value):
                raise TypeError(f"omegas must be a non-empty list of floats, not {value}")
            value = [self._frequency(x) for x in value]
        self._set("omegas", value)

    @property
    def omega_min(self):
        """:obj:`Union[float, None]`: Smallest frequency of a range."""
        return self._data.get("omega_min")

    @omega_min.setter
    def omega_min(self, value):
        if not (value is None or _is_real(value)):
            raise TypeError(f"omega_min must be a float, not {type(value)}")
        self._set("omega_min", None if value is None else self._frequency(value))

    @property
    def omega_max(self):
        """:obj:`Union[float, None]`: Largest frequency of a range."""
        return self._data.get("omega_max")

    @omega_max.setter
    def omega_max(self, value):
        if not (value is None or _is_real(value)):
            raise TypeError(f"omega_max must be a float, not {type(value)}")
        self._set("omega_max", None if value is None else self._frequency(value))

    @property
    def count(self):
        """:obj:`int`: Number of frequencies of a range. Default 1."""
        return self._data.get("count", 1)

    @count.setter
    def count(self, value):
        if not _is_int(value):
            raise TypeError(f"count must be an int, not {type(value)}")
        if value < 1:
            raise ValueError(f"count must be positive, not {value}")
        self._set("count", int(value))

    @property
    def spacing(self):
        """:obj:`str`: ``linear`` in ``omega`` or ``geometric`` in ``m - omega``."""
        return self._data.get("spacing", "linear")

    @spacing.setter
    def spacing(self, value):
        if value not in ("linear", "geometric"):
            raise ValueError(f'spacing must be "linear" or "geometric", not {value}')
        self._set("spacing", value)

    @property
    def N(self):
        """:obj:`Union[int, str]`: Grid points or ``"auto"``."""
        return self._data.get("N", "auto")

    @N.setter
    def N(self, value):
        if value != "auto":
            if not _is_int(value):
                raise TypeError(f'N must be an int or "auto", not {value}')
            if not 16 <= value <= self.N_max:
                raise ValueError(f"N must be in [16, {self.N_max}], not {value}")
            value = int(value)
        self._set("N", value)

    @property
    def L(self):
        """:obj:`Union[float, str]`: Half-width or ``"auto"``."""
        return self._data.get("L", "auto")

    @L.setter
    def L(self, value):
        if value != "auto":
            if not _is_real(value):
                raise TypeError(f'L must be a float or "auto", not {value}')
            if not value > 0:
                raise ValueError(f"L must be positive, not {value}")
            value = float(value)
        self._set("L", value)

    @property
    def N_max(self):
        """:obj:`int`: Cap on automatic grids. Default 4096."""
        return self._data.get("N_max", DENSE_LIMIT)

    @N_max.setter
    def N_max(self, value):
        if not _is_int(value):
            raise TypeError(f"N_max must be an int, not {type(value)}")
        if not 16 <= value <= DENSE_LIMIT:
            raise ValueError(f"N_max must be in [16, {DENSE_LIMIT}], not {value}")
        self._set("N_max", int(value))

    @property
    def out(self):
        """:obj:`Union[str, None]`: Output directory; the environment default if ``None``."""
        return self._data.get("out")

    @out.setter
    def out(self, value):
        if not (value is None or isinstance(value, str)):
            raise TypeError(f"out must be a str, not {type(value)}")
        self._set("out", value)

    @property
    def checks(self):
        """:obj:`list` of :obj:`str`: Stages to run."""
        return list(self._data.get("checks", list(CHECKS)))

    @checks.setter
    def checks(self, value):
        if not isinstance(value, list) or not set(value) <= set(CHECKS):
            raise ValueError(f"checks must be a list from {CHECKS}, not {value}")
        self._set("checks", [c for c in CHECKS if c in value])

    @property
    def jobs(self):
        """:obj:`int`: Worker processes. Default 1."""
        return self._data.get("jobs", 1)

    @jobs.setter
    def jobs(self, value):
        if not _is_int(value):
            raise TypeError(f"jobs must be an int, not {type(value)}")
        if value < 1:
            raise ValueError(f"jobs must be positive, not {value}")
        self._set("jobs", int(value))

    @property
    def Lambda_N(self):
        """:obj:`int`: Grid points for the limit eigenvalue. Default 1024."""
        return self._data.get("Lambda_N", 1024)

    @Lambda_N.setter
    def Lambda_N(self, value):
        if not _is_int(value):
            raise TypeError(f"Lambda_N must be an int, not {type(value)}")
        if not 16 <= value <= DENSE_LIMIT:
            raise ValueError(f"Lambda_N must be in [16, {DENSE_LIMIT}], not {value}")
        self._set("Lambda_N", int(value))

    @property
    def Lambda_L(self):
        """:obj:`float`: Half-width for the limit eigenvalue. Default 20."""
        return self._data.get("Lambda_L", 20.0)

    @Lambda_L.setter
    def Lambda_L(self, value):
        if not _is_real(value):
            raise TypeError(f"Lambda_L must be a float, not {type(value)}")
        if not value > 0:
            raise ValueError(f"Lambda_L must be positive, not {value}")
        self._set("Lambda_L", float(value))

    def _frequency(self, value):
        if not 0.0 < value < self.m:
            raise ValueError(f"omega={value} is outside (0, m={self.m})")
        return float(value)

    @dontcheck
    @property
    def omega_list(self):
        """:obj:`list` of :obj:`float`: Sorted frequencies of the scan.

        Raises:
            :class:`ConfigurationError`
        """
        if not self.omegas is None:
            result = sorted(self.omegas)
        else:
            if self.omega_min is None or self.omega_max is None:
                raise MetaDataError("either omegas or omega_min and omega_max must be set")
            if self.omega_min > self.omega_max:
                raise MetaDataError(f"omega_min={self.omega_min} exceeds omega_max={self.omega_max}")
            if self.count == 1:
                result = [self.omega_min]
            elif self.spacing == "linear":
                result = list(np.linspace(self.omega_min, self.omega_max, self.count))
            else:
                gaps = np.geomspace(self.m - self.omega_min, self.m - self.omega_max, self.count)
                result = sorted(self.m - gaps)
        result = [float(x) for x in result]
        for omega in result:
            if not 0.0 < omega < self.m:
                raise MetaDataError(f"omega={omega} is outside (0, m={self.m})")
        return result

    @dontcheck
    @property
    def model(self):
        """:class:`NonlinearityModel` of the config."""
        return make_model(
            self.k, self.a, tuple(zip(self.higher_exponents, self.higher_coefficients)), self.m
        )

    def grid(self, omega):
        """Grid in physical ``x`` for a frequency.

        Automatic parts follow :func:`auto_grid` in units of ``m = 1``.
        """
        eps = math.sqrt(1.0 - (omega / self.m) ** 2)
        auto = auto_grid(eps, self.N_max)
        half_width = auto.half_width / self.m if self.L == "auto" else self.L
        points = auto.points if self.N == "auto" else self.N
        return Grid(half_width, points)

    def output_dir(self, default):
        """:obj:`pathlib.Path`: ``out`` or ``default``."""
        return Path(self.out if not self.out is None else default).expanduser()
