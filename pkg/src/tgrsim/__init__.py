"""Discrete-event simulator for XR downlink delivery with tethered UE groups."""

from .config import SimConfig, load_config
from .simulation import run_drop

__version__ = "0.1.0"

__all__ = ["SimConfig", "load_config", "run_drop", "__version__"]
