"""Exception root shared by every pipeline app.

Each subclass sets ``exit_code`` so the management commands can map a failure
to the process exit status without knowing where it came from.
"""

INPUT_ERROR = 2
BINDING_ERROR = 3
NUMERICAL_ERROR = 4


class ActiveSetError(Exception):
    """Base class for all pipeline failures"""
    exit_code = INPUT_ERROR


class InputError(ActiveSetError):
    exit_code = INPUT_ERROR


class BindingError(ActiveSetError):
    exit_code = BINDING_ERROR


class NumericalError(ActiveSetError):
    exit_code = NUMERICAL_ERROR


class ConfigError(BindingError):
    """Invalid or inconsistent run configuration"""


class DimensionMismatch(NumericalError):
    def __init__(self, what, expected, got):
        self.what = what
        self.expected = expected
        self.got = got
        super().__init__(f"{what}: expected dimension {expected}, got {got}")
