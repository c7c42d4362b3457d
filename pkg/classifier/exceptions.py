from core.exceptions import BindingError, ConfigError, InputError, NumericalError


class EmptyDataset(InputError):
    def __init__(self):
        super().__init__("Cannot train on an empty dataset")


class LabelOutOfRange(InputError):
    def __init__(self, label, k):
        self.label = label
        self.k = k
        super().__init__(f"Label {label} is outside the {k} known classes")


class StaleCache(NumericalError):
    """Backward pass called with a cache the model no longer matches"""


class NonfiniteActivation(NumericalError):
    def __init__(self, where):
        self.where = where
        super().__init__(f"Non-finite activation in {where}")


class KOutOfRange(ConfigError):
    def __init__(self, K, k):
        self.K = K
        self.k = k
        super().__init__(f"K must lie in [1, {k}], got {K}")


class VersionMismatch(BindingError):
    def __init__(self, found, expected):
        super().__init__(f"Model file version {found!r} is not supported (expected {expected})")


class CorruptPayload(InputError):
    def __init__(self, detail):
        super().__init__(f"Model payload is corrupt: {detail}")


class BindingMismatch(BindingError):
    def __init__(self, model_binding, dictionary_binding):
        self.model_binding = model_binding
        self.dictionary_binding = dictionary_binding
        super().__init__(
            f"Model was trained against dictionary {model_binding[:12]}, "
            f"not {dictionary_binding[:12]}"
        )


class SingleClassDataset(UserWarning):
    """Training data holds a single class; the model will be a constant predictor"""
