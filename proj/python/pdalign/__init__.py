"""Pairwise-difference embedding alignment toolkit."""

from ._pdalign import *  # noqa: F401,F403
from ._pdalign import __doc__  # noqa: F401

__version__ = "0.1.0"
