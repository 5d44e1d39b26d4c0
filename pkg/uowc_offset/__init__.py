from uowc_offset.config import SystemParams, load_config, validate_params
from uowc_offset.errors import (
    ConfigError,
    DomainError,
    InfeasibleError,
    NoCrossingError,
    ValidationFailed,
)

__version__ = "0.1.0"

__all__ = [
    "ConfigError",
    "DomainError",
    "InfeasibleError",
    "NoCrossingError",
    "SystemParams",
    "ValidationFailed",
    "load_config",
    "validate_params",
]
