"""Multi-intention inverse reinforcement learning on tabular MDPs."""

from ._miirl import *  # noqa: F401,F403
from ._miirl import __version__
