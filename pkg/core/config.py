"""
Run configuration: documented defaults, flat key-value files, flag overrides.
"""

import dataclasses
import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

from decouple import Csv, RepositoryEnv, UndefinedValueError, config as env_config
from django.conf import settings

from core.exceptions import ConfigError
from core.rng import RandomStreams

logger = logging.getLogger(__name__)

DEFAULT_ELEMENTS = ('C', 'N', 'O', 'S', 'P', 'F', 'Cl', 'Br', 'I')

SELECTION_MODES = ('set-coverage', 'modular')
DECODE_MODES = ('beam', 'sample')
GNN_UPDATES = ('concat', 'additive')
ADAPTER_INITS = ('auto', 'zero', 'random')
ACTION_MODES = ('mean', 'sample')
SPLITS = ('train', 'valid', 'test')

PATH_FIELDS = ('run_dir', 'dataset')

_TRUE = {'1', 'yes', 'true', 'on'}
_FALSE = {'0', 'no', 'false', 'off', ''}


def _default_run_dir():
    return str(Path(getattr(settings, 'CFX_HOME', 'runs')) / 'default')


@dataclass(frozen=True)
class RunConfig:
    """
    Every knob a run can turn. Constructing one does not validate; go through
    ``load_config`` or ``replace``.
    """
    seed: int = 0
    elements: tuple = DEFAULT_ELEMENTS
    min_atom_count: int = 50
    explain_class: int = 0
    input_split: str = 'test'

    fp_radius: int = 2
    fp_nbits: int = 2048
    delta: float = 0.87
    alpha: float = 1.0
    beta: float = 10.0

    gnn_hidden: int = 64
    gnn_layers: int = 3
    gnn_update: str = 'concat'
    gnn_lr: float = 0.001
    gnn_epochs: int = 1000
    gnn_batch_size: int = 64

    vocab_size: int = 200
    max_fragment_atoms: int = 10
    latent_dim: int = 56
    vae_hidden: int = 128
    vae_lr: float = 0.001
    vae_epochs: int = 40
    vae_batch_size: int = 32
    n_max_fragments: int = 10
    max_decode_atoms: int = 40
    beam: int = 10
    temperature: float = 1.0
    decode_mode: str = 'beam'

    adapter_hidden: int = 400
    adapter_init: str = 'auto'
    adapter_lr: float = 1e-5
    adapter_updates: int = 40
    episodes_per_update: int = 8
    ppo_epochs: int = 4
    ppo_clip: float = 0.2
    kl_limit: float = 0.5
    value_coef: float = 0.5
    ucb_c: float = 1.0
    n_samples: int = 4
    t_train: int = 4
    t_infer: int = 20
    action_mode: str = 'mean'

    k: int = 10
    selection_mode: str = 'set-coverage'
    final_only: bool = False
    closest_inputs: int = 5

    sa_initial_temperature: float = 0.1
    sa_halving_period: int = 10
    sa_literal_input: bool = False
    walk_iterations: int = 20

    sweep_k_values: tuple = (1, 2, 5, 10, 15, 20, 25, 50)
    sweep_iteration_values: tuple = (1, 2, 5, 10, 20)

    no_pretrain: bool = False
    no_adapter_training: bool = False

    run_dir: str = dataclasses.field(default_factory=_default_run_dir)
    dataset: str = ''

    def validate(self):
        problems = []
        if self.seed < 0:
            problems.append("seed must be non-negative")
        if not self.elements:
            problems.append("elements must not be empty")
        if not 0.0 <= self.delta <= 1.0:
            problems.append(f"delta must lie in [0, 1], got {self.delta}")
        if self.fp_radius < 0:
            problems.append("fp_radius must be >= 0")
        if self.fp_nbits < 1 or self.fp_nbits & (self.fp_nbits - 1):
            problems.append(f"fp_nbits must be a power of two, got {self.fp_nbits}")
        if not 0.0 < self.ppo_clip < 1.0:
            problems.append(f"ppo_clip must lie in (0, 1), got {self.ppo_clip}")
        if self.explain_class not in (0, 1):
            problems.append("explain_class must be 0 or 1")
        if self.temperature <= 0:
            problems.append("temperature must be positive")
        if self.sa_initial_temperature <= 0:
            problems.append("sa_initial_temperature must be positive")
        choices = {
            'selection_mode': SELECTION_MODES, 'decode_mode': DECODE_MODES,
            'gnn_update': GNN_UPDATES, 'adapter_init': ADAPTER_INITS,
            'action_mode': ACTION_MODES, 'input_split': SPLITS,
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                problems.append(f"{name} must be one of {', '.join(allowed)}, got {getattr(self, name)!r}")
        positive = (
            'gnn_hidden', 'gnn_layers', 'gnn_epochs', 'gnn_batch_size', 'vocab_size', 'max_fragment_atoms',
            'latent_dim', 'vae_hidden', 'vae_epochs', 'vae_batch_size', 'n_max_fragments', 'max_decode_atoms',
            'beam', 'adapter_hidden', 'adapter_updates', 'episodes_per_update', 'ppo_epochs', 'n_samples',
            't_train', 't_infer', 'k', 'sa_halving_period', 'walk_iterations', 'min_atom_count',
        )
        for name in positive:
            if getattr(self, name) < 1:
                problems.append(f"{name} must be >= 1")
        if problems:
            raise ConfigError('; '.join(problems), code='invalid_config')
        return self

    def to_dict(self):
        data = dataclasses.asdict(self)
        return {key: list(value) if isinstance(value, tuple) else value for key, value in data.items()}

    def config_hash(self):
        payload = {key: value for key, value in self.to_dict().items() if key not in PATH_FIELDS}
        encoded = json.dumps(payload, sort_keys=True).encode('utf-8')
        return hashlib.sha256(encoded).hexdigest()[:16]

    @property
    def target_class(self):
        return 1 - self.explain_class

    def resolved_adapter_init(self):
        """``auto`` means zero-init for training and random-init for the untrained ablation"""
        if self.adapter_init != 'auto':
            return self.adapter_init
        return 'random' if self.no_adapter_training else 'zero'

    def streams(self):
        return RandomStreams(self.seed)

    def replace(self, **changes):
        return dataclasses.replace(self, **changes).validate()


FIELDS = {field.name: field for field in dataclasses.fields(RunConfig)}


def _default_of(field):
    if field.default is not dataclasses.MISSING:
        return field.default
    return field.default_factory()


def cast_value(name, raw):
    """Convert a string (file or flag) or native value to the field's type"""
    default = _default_of(FIELDS[name])
    try:
        if not isinstance(raw, str):
            return tuple(raw) if isinstance(default, tuple) else type(default)(raw)
        if isinstance(default, bool):
            lowered = raw.strip().lower()
            if lowered in _TRUE:
                return True
            if lowered in _FALSE:
                return False
            raise ValueError(raw)
        if isinstance(default, tuple):
            item_type = type(default[0]) if default else str
            return tuple(Csv(cast=item_type)(raw))
        return type(default)(raw.strip())
    except (TypeError, ValueError):
        raise ConfigError(f"cannot interpret {raw!r} for {name}", code='bad_value') from None


def load_config(path=None, overrides=None):
    """
    Resolve a RunConfig.

    Order (later wins): dataclass defaults, the CFX_SEED environment variable
    (seed only), the key-value file at ``path``, then ``overrides`` whose value
    is not None.
    """
    values = {}
    try:
        values['seed'] = env_config('CFX_SEED')
    except UndefinedValueError:
        pass

    if path:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file {path} does not exist", code='missing_config')
        repository = RepositoryEnv(str(path))
        unknown = sorted(set(repository.data) - set(FIELDS))
        if unknown:
            raise ConfigError(f"unknown config keys in {path}: {', '.join(unknown)}", code='unknown_key')
        values.update({key: repository[key] for key in repository.data})
        logger.debug(f"Loaded {len(repository.data)} keys from {path}")

    for key, value in (overrides or {}).items():
        if key not in FIELDS:
            raise ConfigError(f"unknown config key {key}", code='unknown_key')
        if value is not None:
            values[key] = value

    cast = {key: cast_value(key, value) for key, value in values.items()}
    return RunConfig(**cast).validate()
