"""Provides :class:`DiracStabException` and :class:`ConfigurationError`."""

class DiracStabException(Exception):
    """Base DiracStab exception."""


class ConfigurationError(DiracStabException):
    """Invalid grid, model or run parameters."""
