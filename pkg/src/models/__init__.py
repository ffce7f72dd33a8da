"""QHetSim Data Models"""

from .records import (
    TOOL_VERSION,
    CheckResult,
    PointRecord,
    RunReport,
    SimulationSummary,
    ValidationReport,
)

__all__ = [
    "TOOL_VERSION",
    "CheckResult",
    "PointRecord",
    "RunReport",
    "SimulationSummary",
    "ValidationReport",
]
