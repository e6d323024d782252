"""Exception hierarchy.

Errors fall into two families that the command line maps to exit codes:
input problems (bad files, schemas, configs, codings) exit with 1 and
numerical failures (separation, singular systems, divergence) exit with 2.
"""


class HybridBoostError(Exception):
    exit_code = 1


class InputError(HybridBoostError, ValueError):
    """Bad data, file or configuration."""

    exit_code = 1


class SchemaError(InputError):
    pass


class ConfigError(InputError):
    pass


class CodingError(InputError):
    pass


class EncodingError(InputError):
    def __init__(self, message, report=None):
        super().__init__(message)
        self.report = report or {}


class DegenerateOutcomeError(InputError):
    pass


class MetricError(InputError):
    pass


class LookupFailure(InputError, LookupError):
    pass


class NumericalError(HybridBoostError, ArithmeticError):
    exit_code = 2


class CalibrationError(NumericalError):
    pass


class SeparationError(NumericalError):
    pass


class RankError(NumericalError):
    pass


class DivergenceError(NumericalError):
    pass
