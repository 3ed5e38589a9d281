"""Flow-density estimation, tail-boundary sample generation, and
density+distance anomaly scoring."""

from ._tailgen import *  # noqa: F401,F403
from ._tailgen import __doc__  # noqa: F401
