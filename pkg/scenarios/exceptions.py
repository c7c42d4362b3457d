from core.exceptions import ConfigError, InputError, NumericalError


class NegativeSigmaFrac(ConfigError):
    def __init__(self, sigma_frac):
        self.sigma_frac = sigma_frac
        super().__init__(f"sigma_frac must be non-negative, got {sigma_frac}")


class AllSamplesInfeasible(NumericalError):
    def __init__(self, n_samples):
        self.n_samples = n_samples
        super().__init__(f"All {n_samples} sampled DC-OPF instances were infeasible")


class EmptySplit(InputError):
    def __init__(self, n_samples, train_fraction=None):
        self.n_samples = n_samples
        if train_fraction is None:
            message = "Evaluation set is empty"
        else:
            message = f"Splitting {n_samples} samples at train_fraction={train_fraction} leaves one side empty"
        super().__init__(message)


class DatasetFormatError(InputError):
    """A dataset file cannot be read back"""
