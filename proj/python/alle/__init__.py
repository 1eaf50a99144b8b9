"""Locally linear embedding with a learned Mahalanobis metric."""

from ._core import *  # noqa: F401,F403
from ._core import __version__  # noqa: F401
