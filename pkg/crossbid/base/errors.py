class CrossbidError(Exception):
    """Base error. `category` is the diagnostic label printed by the CLI."""

    category = "internal"


class DimensionError(CrossbidError, ValueError):
    category = "dimension"


class ConfigError(CrossbidError, ValueError):
    category = "config"


class ContractError(CrossbidError, RuntimeError):
    category = "contract"


class NumericError(CrossbidError, ArithmeticError):
    category = "numeric"


class DomainError(CrossbidError, ValueError):
    category = "domain"


class StepIndexError(CrossbidError, IndexError):
    category = "index"


class PolicyError(CrossbidError, RuntimeError):
    category = "policy"


class InferenceError(PolicyError):
    category = "inference"


class DatasetParseError(CrossbidError, ValueError):
    category = "parse"

    def __init__(self, line_no: int, message: str) -> None:
        super().__init__(f"line {line_no}: {message}")
        self.line_no = line_no


class DatasetFormatError(CrossbidError, ValueError):
    category = "format"


class CompatibilityError(CrossbidError, ValueError):
    category = "compatibility"


class CrossbidIOError(CrossbidError, OSError):
    category = "io"


EXIT_CODES: dict[str, int] = {
    "internal": 1,
    "config": 2,
    "io": 3,
    "parse": 4,
    "format": 4,
    "compatibility": 5,
    "numeric": 6,
    "dimension": 7,
    "contract": 7,
    "domain": 7,
    "index": 7,
    "policy": 8,
    "inference": 8,
}
