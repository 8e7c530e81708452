"""Model-based MMSE channel prediction and estimation (Python bindings)."""

from ._mmsechan import *  # noqa: F401,F403
from ._mmsechan import __doc__  # noqa: F401
