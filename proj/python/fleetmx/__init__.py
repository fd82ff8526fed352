"""Fleet maintenance analytics: count tensors, CP/PARAFAC, sequence mining, LSTM next-job model."""

from ._core import *  # noqa: F401,F403
from ._core import FleetmxError  # noqa: F401

__version__ = "0.1.0"
