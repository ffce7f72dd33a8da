"""QHetSim Core Components"""

from .config_manager import (
    LoggingConfig,
    apply_overrides,
    get_thread_limit,
    load_scenario,
    load_scenario_file,
    serialize_scenario,
)
from .errors import (
    ConfigurationError,
    DomainError,
    LengthError,
    ParseError,
    QhetError,
    ShapeError,
    ValidationError,
)
from .scenario import DerivedParams, PhysicalConstants, Scenario, derive

__all__ = [
    "LoggingConfig",
    "apply_overrides",
    "get_thread_limit",
    "load_scenario",
    "load_scenario_file",
    "serialize_scenario",
    "ConfigurationError",
    "DomainError",
    "LengthError",
    "ParseError",
    "QhetError",
    "ShapeError",
    "ValidationError",
    "DerivedParams",
    "PhysicalConstants",
    "Scenario",
    "derive",
]
