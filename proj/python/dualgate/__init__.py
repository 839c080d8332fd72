"""Dual-type qubit entangling gate simulator."""

from importlib import resources as _resources

from ._core import *  # noqa: F401,F403

__version__ = "0.1.0"


def preset_path(name="paper-preset.cfg"):
    """Path of a config file shipped with the package."""
    return str(_resources.files(__name__) / "data" / name)
