"""Run configuration for the pipeline commands.

A run is described by one JSON document::

    {
      "case_path": "pglib/pglib_opf_case24_ieee_rts.m",
      "sigma_frac": 0.03,
      "n_samples": 50000,
      "train_fraction": 0.8,
      "seed": 0,
      "stopping": {"window": 1000, "max_samples": 50000},
      "nn": {"layer_widths": [256, 256], "epochs": 20},
      "eval": {"K_list": [1, 2, 3]},
      "output_dir": "runs/case24"
    }

Values are resolved in this order, later winning: dataclass defaults, the
ACTIVESET settings, the config document, command-line flags. Leaving
``n_samples`` null makes ``generate`` sample until the stopping rule fires.
"""
import json
import logging
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path
from typing import Optional

from django.conf import settings

from classifier.training import TrainConfig
from core.exceptions import ConfigError
from dcopf.services import TOL_ACTIVE, TOL_FEASIBLE
from scenarios.exceptions import NegativeSigmaFrac
from scenarios.services import DEFAULT_MAX_SAMPLES, DEFAULT_WINDOW

from .exceptions import MissingInput

logger = logging.getLogger(__name__)


def _section(cls, data, name):
    data = dict(data or {})
    unknown = set(data) - {f.name for f in fields(cls)}
    if unknown:
        raise ConfigError(f"Unknown keys in '{name}': {sorted(unknown)}")
    try:
        return cls(**data)
    except TypeError as e:
        raise ConfigError(f"Invalid '{name}' section: {e}") from e


@dataclass(frozen=True)
class StoppingConfig:
    window: int = DEFAULT_WINDOW
    max_samples: int = DEFAULT_MAX_SAMPLES

    def __post_init__(self):
        if self.window < 1 or self.max_samples < 1:
            raise ConfigError(f"Stopping rule needs a positive window and budget, got {self}")


@dataclass(frozen=True)
class EvalConfig:
    K_list: tuple = (1, 2, 3)
    tol_active: float = TOL_ACTIVE
    tol_feasible: float = TOL_FEASIBLE
    fallback_lp: bool = False

    def __post_init__(self):
        object.__setattr__(self, 'K_list', tuple(int(K) for K in self.K_list))
        if not self.K_list or any(K < 1 for K in self.K_list):
            raise ConfigError(f"K_list entries must be at least 1, got {list(self.K_list)}")
        if self.tol_active <= 0 or self.tol_feasible <= 0:
            raise ConfigError("Tolerances must be positive")


@dataclass(frozen=True)
class SweepConfig:
    sizes: tuple = (5000, 10000, 20000, 40000)
    depths: tuple = (2, 3, 4, 5)

    def __post_init__(self):
        object.__setattr__(self, 'sizes', tuple(int(s) for s in self.sizes))
        object.__setattr__(self, 'depths', tuple(int(d) for d in self.depths))
        if any(s < 1 for s in self.sizes) or any(d < 1 for d in self.depths):
            raise ConfigError("Sweep sizes and depths must be positive")


@dataclass(frozen=True)
class RunConfig:
    case_path: str = ''
    sigma_frac: float = 0.03
    n_samples: Optional[int] = 10_000
    train_fraction: float = 0.8
    seed: int = 0
    threads: Optional[int] = None
    output_dir: str = 'runs'
    stopping: StoppingConfig = field(default_factory=StoppingConfig)
    nn: TrainConfig = field(default_factory=TrainConfig)
    eval: EvalConfig = field(default_factory=EvalConfig)
    sweep: SweepConfig = field(default_factory=SweepConfig)

    def __post_init__(self):
        if self.sigma_frac < 0:
            raise NegativeSigmaFrac(self.sigma_frac)
        if self.n_samples is not None and self.n_samples < 1:
            raise ConfigError(f"n_samples must be at least 1, got {self.n_samples}")
        if not 0 < self.train_fraction < 1:
            raise ConfigError(f"train_fraction must lie in (0, 1), got {self.train_fraction}")
        if self.threads is not None and self.threads < 1:
            raise ConfigError(f"threads must be at least 1, got {self.threads}")

    @property
    def case_name(self):
        return Path(self.case_path).stem if self.case_path else ''

    @property
    def output_path(self):
        return Path(self.output_dir)

    def require_case(self):
        if not self.case_path:
            raise ConfigError("No case_path given (use --case or the config file)")
        path = Path(self.case_path)
        if not path.is_file():
            raise MissingInput(path, 'case file')
        return path

    def to_dict(self):
        data = asdict(self)
        data['nn'] = self.nn.to_dict()
        data['eval']['K_list'] = list(self.eval.K_list)
        data['sweep'] = {'sizes': list(self.sweep.sizes), 'depths': list(self.sweep.depths)}
        return data

    @classmethod
    def from_dict(cls, data):
        data = dict(data)
        unknown = set(data) - {f.name for f in fields(cls)}
        if unknown:
            raise ConfigError(f"Unknown config keys: {sorted(unknown)}")

        nn = dict(data.pop('nn', None) or {})
        # The network shares the run seed unless the nn section pins its own
        nn.setdefault('seed', int(data.get('seed', 0)))
        try:
            data['nn'] = TrainConfig.from_dict(nn)
        except TypeError as e:
            raise ConfigError(f"Invalid 'nn' section: {e}") from e
        data['stopping'] = _section(StoppingConfig, data.get('stopping'), 'stopping')
        data['eval'] = _section(EvalConfig, data.get('eval'), 'eval')
        data['sweep'] = _section(SweepConfig, data.get('sweep'), 'sweep')
        try:
            return cls(**data)
        except TypeError as e:
            raise ConfigError(str(e)) from e


def _merge(base, override):
    merged = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(merged.get(key), dict):
            merged[key] = _merge(merged[key], value)
        else:
            merged[key] = value
    return merged


def settings_defaults():
    defaults = settings.ACTIVESET
    return {
        'sigma_frac': defaults['SIGMA_FRAC'],
        'output_dir': defaults['OUTPUT_DIR'],
        'threads': defaults['THREADS'],
        'eval': {'tol_active': defaults['TOL_ACTIVE'], 'tol_feasible': defaults['TOL_FEASIBLE']},
    }


def read_config_file(path):
    path = Path(path)
    if not path.is_file():
        raise MissingInput(path, 'config file')
    try:
        data = json.loads(path.read_text(encoding='utf-8'))
    except ValueError as e:
        raise ConfigError(f"{path} is not valid JSON: {e}") from e
    if not isinstance(data, dict):
        raise ConfigError(f"{path} must hold a JSON object")
    return data


def load_run_config(path=None, overrides=None):
    """Resolve a RunConfig from settings, an optional file and flag overrides.

    ``overrides`` may nest sections (``{'eval': {'fallback_lp': True}}``);
    keys whose value is None are ignored so unset flags never mask the file.
    """
    data = settings_defaults()
    if path:
        data = _merge(data, read_config_file(path))
    if overrides:
        data = _merge(data, _drop_none(overrides))
    config = RunConfig.from_dict(data)
    logger.debug(f"Resolved run config: {config.to_dict()}")
    return config


def _drop_none(data):
    cleaned = {}
    for key, value in data.items():
        if isinstance(value, dict):
            value = _drop_none(value)
            if not value:
                continue
        if value is not None:
            cleaned[key] = value
    return cleaned
