"""
Candidate pools: the molecules a method proposed, before selection. Every
method writes the same format so selection and metrics treat them alike.
"""

from dataclasses import dataclass, field
from pathlib import Path

from chemistry.canonical import canonical_key
from chemistry.smiles import parse_smiles
from core.exceptions import ConfigError
from core.utils import read_json, write_json

POOL_FORMAT_VERSION = 1

POOL_SCHEMA = {
    'type': 'object',
    'required': ['format_version', 'method', 'config_hash', 'delta', 'fp_radius', 'fp_nbits',
                 'explain_class', 'target_class', 'inputs', 'candidates', 'seed'],
    'properties': {
        'format_version': {'const': POOL_FORMAT_VERSION},
        'method': {'type': 'string'},
        'config_hash': {'type': 'string'},
        'delta': {'type': 'number', 'minimum': 0, 'maximum': 1},
        'fp_radius': {'type': 'integer', 'minimum': 0},
        'fp_nbits': {'type': 'integer', 'minimum': 1},
        'explain_class': {'enum': [0, 1]},
        'target_class': {'enum': [0, 1]},
        'seed': {'type': 'integer', 'minimum': 0},
        'inputs': {'type': 'array', 'items': {'type': 'string'}},
        'candidates': {
            'type': 'array',
            'items': {
                'type': 'object',
                'required': ['smiles', 'input_index', 'step'],
                'properties': {
                    'smiles': {'type': 'string'},
                    'input_index': {'type': 'integer', 'minimum': 0},
                    'step': {'type': 'integer', 'minimum': 0},
                },
            },
        },
    },
}


@dataclass(frozen=True)
class PoolEntry:
    smiles: str
    input_index: int
    step: int


@dataclass
class CandidatePool:
    method: str
    config_hash: str
    delta: float
    fp_radius: int
    fp_nbits: int
    explain_class: int
    target_class: int
    inputs: list
    seed: int
    entries: list = field(default_factory=list)

    @classmethod
    def for_run(cls, method, config, inputs, explain_class):
        return cls(
            method=method,
            config_hash=config.config_hash(),
            delta=config.delta,
            fp_radius=config.fp_radius,
            fp_nbits=config.fp_nbits,
            explain_class=explain_class,
            target_class=1 - explain_class,
            inputs=[canonical_key(mol) for mol in inputs],
            seed=config.seed,
        )

    def add(self, mol, input_index, step):
        self.entries.append(PoolEntry(canonical_key(mol), int(input_index), int(step)))

    def __len__(self):
        return len(self.entries)

    def distinct_smiles(self):
        """Candidate SMILES in first-seen order"""
        return list(dict.fromkeys(entry.smiles for entry in self.entries))

    def molecules(self):
        return [parse_smiles(smiles) for smiles in self.distinct_smiles()]

    def input_molecules(self):
        return [parse_smiles(smiles) for smiles in self.inputs]

    def metric_settings(self):
        return self.delta, self.fp_radius, self.fp_nbits

    def check_compatible(self, other):
        """Metrics are only comparable under the same distance threshold and fingerprint"""
        if self.metric_settings() != other.metric_settings():
            raise ConfigError(
                f"pools disagree on (delta, fp_radius, fp_nbits): {self.metric_settings()} "
                f"({self.method}) vs {other.metric_settings()} ({other.method})", code='incompatible_pools'
            )

    def to_json(self):
        return {
            'format_version': POOL_FORMAT_VERSION,
            'method': self.method,
            'config_hash': self.config_hash,
            'delta': self.delta,
            'fp_radius': self.fp_radius,
            'fp_nbits': self.fp_nbits,
            'explain_class': self.explain_class,
            'target_class': self.target_class,
            'seed': self.seed,
            'inputs': list(self.inputs),
            'candidates': [
                {'smiles': e.smiles, 'input_index': e.input_index, 'step': e.step} for e in self.entries
            ],
        }

    def save(self, path):
        return write_json(path, self.to_json())

    @classmethod
    def load(cls, path, producer=None):
        data = read_json(Path(path), POOL_SCHEMA, producer=producer)
        pool = cls(
            method=data['method'],
            config_hash=data['config_hash'],
            delta=data['delta'],
            fp_radius=data['fp_radius'],
            fp_nbits=data['fp_nbits'],
            explain_class=data['explain_class'],
            target_class=data['target_class'],
            inputs=data['inputs'],
            seed=data['seed'],
        )
        pool.entries = [PoolEntry(c['smiles'], c['input_index'], c['step']) for c in data['candidates']]
        return pool
