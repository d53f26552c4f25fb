"""Learned RAW user grouping for Wi-Fi HaLow, backed by the C++ core."""

from ._rawgrl import *  # noqa: F401,F403
from ._rawgrl import ConfigError, ConvergenceError, IoError  # noqa: F401

__version__ = "0.1.0"
