"""Provides :class:`MetaDataNode`, a key/value table whose keys are
validated by property setters.
"""

from copy import deepcopy
from diracstab.utils.logger import Logger
from diracstab.utils.exception import ConfigurationError


class MetaDataError(ConfigurationError):
    pass


class IncorrectProperty(MetaDataError):
    pass


DERIVED = "_diracstab_derived"


def dontcheck(prop):
    """Marks a derived property that is not evaluated at construction.

    Derived properties combine several keys, so they are checked when
    used, after every key on its own has passed.

    Raises:
        :class:`TypeError`
        :class:`AttributeError`

    Example:
        .. code-block:: Python

            @dontcheck
            @property
            def model(self):
                return make_model(self.k, self.a)
    """
    if not isinstance(prop, property):
        raise TypeError(f"Must decorate a property, not {type(prop)}")
    if not prop.fget:
        raise AttributeError("Property object must have a getter method")
    setattr(prop.fget, DERIVED, True)
    return prop


class MetaDataNode:
    """Key/value table with property access.

    Every property with a setter is a key. Getters return the stored value
    or the default, setters validate and store; storing ``None`` removes
    the key. Construction rejects unknown keys, then passes every key
    through its setter, so defaults are filled in and all invalid keys are
    reported together. Read-only properties not marked by
    :func:`dontcheck` are evaluated once.
    """

    def __init__(self, data=None, mutable=True):
        """
        Args:
            data (:obj:`Union[dict, None]`): Key/value table. Empty if ``None``.
            mutable (:obj:`bool`): Allow setting keys after construction.

        Raises:
            :class:`TypeError`
            :class:`IncorrectProperty`
        """
        if data is None:
            data = {}
        if not isinstance(data, dict):
            raise TypeError(f"data must be a dict, not {type(data)}")

        self._logger = Logger(self.__class__.__name__)
        self.__mutable = True
        self._data = deepcopy(data)

        unknown = sorted(map(str, set(self._data) - set(self.keys())))
        if unknown:
            raise IncorrectProperty(
                f"Unknown keys: {', '.join(unknown)}. Known keys: {', '.join(self.keys())}"
            )
        self.check_properties()
        self.__mutable = mutable

    @classmethod
    def _properties(cls):
        return [
            (name, getattr(cls, name)) for name in dir(cls)
            if isinstance(getattr(cls, name), property)
        ]

    @classmethod
    def keys(cls):
        """:obj:`list` of :obj:`str`: Names of settable properties."""
        return [name for name, prop in cls._properties() if prop.fset]

    def check_properties(self):
        """Validates every key and every checked read-only property.

        Raises:
            :class:`IncorrectProperty` listing all failures.
        """
        failures = []
        for name, prop in self._properties():
            if not prop.fget or getattr(prop.fget, DERIVED, False):
                continue
            try:
                if prop.fset and self.mutable:
                    setattr(self, name, getattr(self, name))
                else:
                    getattr(self, name)
            except Exception as e:
                failures.append(f'"{name}": {e}')
        if failures:
            self._logger.debug(f"{len(failures)} incorrect properties")
            raise IncorrectProperty("Incorrect properties:\n" + "\n".join(failures))

    def _set(self, key, value):
        if not self.mutable:
            raise MetaDataError(f'Cannot set "{key}" of an immutable {self.__class__.__name__}')
        if value is None:
            self._data.pop(key, None)
        else:
            self._data[key] = value

    @property
    def mutable(self):
        """:obj:`bool`: True if keys can be set."""
        return self.__mutable

    @property
    def data(self):
        """:obj:`dict`: Copy of the stored keys."""
        return deepcopy(self._data)
