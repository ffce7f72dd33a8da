"""QHetSim Utilities"""

from .formatting import OutputHelper

__all__ = [
    "OutputHelper",
]
