from crossbid.base.config import CrossbidBaseSettings
from crossbid.base.errors import (
    CompatibilityError,
    ConfigError,
    ContractError,
    CrossbidError,
    CrossbidIOError,
    DatasetFormatError,
    DatasetParseError,
    DimensionError,
    DomainError,
    InferenceError,
    NumericError,
    PolicyError,
    StepIndexError,
)

__all__ = [
    "CrossbidBaseSettings",
    "CompatibilityError",
    "ConfigError",
    "ContractError",
    "CrossbidError",
    "CrossbidIOError",
    "DatasetFormatError",
    "DatasetParseError",
    "DimensionError",
    "DomainError",
    "InferenceError",
    "NumericError",
    "PolicyError",
    "StepIndexError",
]
