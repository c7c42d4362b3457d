from core.exceptions import BindingError, ConfigError, InputError


class MissingInput(InputError):
    def __init__(self, path, what='file'):
        self.path = str(path)
        super().__init__(f"No such {what}: {path}")


class InvalidNetwork(InputError):
    def __init__(self, case_name, diagnostics):
        self.diagnostics = list(diagnostics)
        listed = ', '.join(str(d) for d in self.diagnostics)
        super().__init__(f"Case {case_name} violates network invariants: {listed}")


class CaseMismatch(BindingError):
    def __init__(self, case_name):
        super().__init__(f"Dataset was generated from a different version of case {case_name}")


class StrictModeViolation(ConfigError):
    """A warning was raised while --strict was set"""
