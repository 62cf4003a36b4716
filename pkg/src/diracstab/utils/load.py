"""Discovery of handler classes inside a package.

:class:`diracstab.utils.io.io.Io` uses it to map file suffixes to formats.
"""

import inspect
import pkgutil
import importlib
from pathlib import Path


def package_classes(package, base):
    """Returns the subclasses of ``base`` defined in modules of ``package``.

    Modules are imported in name order, so the result does not depend on
    the file system.

    Args:
        package (Python package): Package.
        base (:obj:`type`): Base class, excluded from the result.

    Returns:
        :obj:`list` of :obj:`type`.

    Raises:
        :class:`TypeError`
    """
    if not inspect.ismodule(package):
        raise TypeError(f"package must be a module, not {type(package)}")
    if not inspect.isclass(base):
        raise TypeError(f"base must be a class, not {type(base)}")

    names = sorted(m.name for m in pkgutil.iter_modules([str(Path(package.__file__).parent)]))
    result = []
    for name in names:
        module = importlib.import_module(f"{package.__name__}.{name}")
        result.extend(
            cls for _, cls in inspect.getmembers(module, inspect.isclass)
            if cls.__module__ == module.__name__ and issubclass(cls, base) and cls is not base
        )
    return result


def suffix_registry(package, base):
    """Maps lower case suffixes (with dot) to handler classes.

    Every handler lists its suffixes without dot in ``SUFFIXES``.

    Raises:
        :class:`TypeError`
        :class:`ValueError`: if two handlers claim one suffix.
    """
    registry = {}
    for cls in package_classes(package, base):
        for suffix in cls.SUFFIXES:
            key = f".{suffix.lower()}"
            if key in registry:
                raise ValueError(
                    f'Suffix "{key}" claimed by {registry[key].__name__} and {cls.__name__}'
                )
            registry[key] = cls
    return registry
