"""Joint transmit precoder and beyond-diagonal RIS optimization.

Library for sum-rate maximization in a multiuser MISO downlink aided by a
beyond-diagonal reconfigurable intelligent surface, covering the nine
mode/architecture cases (reflective/transmissive/hybrid times cell-wise
single-/group-/fully-connected) with a block-coordinate outer loop.
"""

from .channel import ChannelSet, generate_channels, load_channels, pathloss, save_channels
from .driver import NumericFailureError, RunResult, evaluate, initialize, run
from .ris import Architecture, ArchKind, BdRisState, Mode, project_to_case, validate
from .scenario import FadingSpec, Geometry, Scenario, db_to_linear, dbm_to_watts

__version__ = "0.1.0"

__all__ = [
    "Architecture", "ArchKind", "BdRisState", "ChannelSet", "FadingSpec",
    "Geometry", "Mode", "NumericFailureError", "RunResult", "Scenario",
    "db_to_linear", "dbm_to_watts", "evaluate", "generate_channels",
    "initialize", "load_channels", "pathloss", "project_to_case", "run",
    "save_channels", "validate", "__version__",
]
