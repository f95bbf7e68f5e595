"""
Labelled molecule splits and the CSV preparation step that produces them.
"""

import logging
from collections import Counter
from dataclasses import dataclass, field
from pathlib import Path

import pandas as pd

from chemistry.canonical import canonical_key
from chemistry.molecule import check_validity
from chemistry.smiles import parse_smiles
from core.config import SPLITS
from core.exceptions import ChemistryError, DatasetError
from core.utils import read_json, sha256_file, write_json

logger = logging.getLogger(__name__)

MAX_SKIP_RATE = 0.10
SPLIT_RATIOS = (0.8, 0.1, 0.1)

BUNDLE_SCHEMA = {
    'type': 'object',
    'required': ['config_hash', 'explain_class', 'elements', 'provenance', 'splits'],
    'properties': {
        'config_hash': {'type': 'string'},
        'explain_class': {'enum': [0, 1]},
        'elements': {'type': 'array', 'items': {'type': 'string'}},
        'provenance': {'type': 'object'},
        'splits': {
            'type': 'object',
            'required': list(SPLITS),
            'additionalProperties': {
                'type': 'array',
                'items': {
                    'type': 'object',
                    'required': ['smiles', 'label'],
                    'properties': {
                        'smiles': {'type': 'string', 'minLength': 1},
                        'label': {'enum': [0, 1]},
                    },
                },
            },
        },
    },
}


@dataclass(frozen=True)
class LabeledMolecule:
    smiles: str
    label: int
    molecule: object = field(compare=False, repr=False)

    @classmethod
    def from_smiles(cls, smiles, label):
        return cls(smiles, int(label), parse_smiles(smiles))


@dataclass
class DatasetBundle:
    """
    Disjoint train/valid/test splits. ``explain_class`` is the predicted
    class whose members get explained.
    """
    train: list
    valid: list
    test: list
    explain_class: int = 0
    elements: tuple = ()
    provenance: dict = field(default_factory=dict)
    config_hash: str = ''

    def split(self, name):
        if name not in SPLITS:
            raise DatasetError(f"unknown split {name!r}", code='split')
        return getattr(self, name)

    def all(self):
        return self.train + self.valid + self.test

    def sizes(self):
        return {name: len(self.split(name)) for name in SPLITS}

    def to_json(self):
        return {
            'config_hash': self.config_hash,
            'explain_class': self.explain_class,
            'elements': list(self.elements),
            'provenance': self.provenance,
            'splits': {
                name: [{'smiles': item.smiles, 'label': item.label} for item in self.split(name)]
                for name in SPLITS
            },
        }

    def save(self, path):
        return write_json(path, self.to_json())

    @classmethod
    def load(cls, path, producer='prep'):
        data = read_json(Path(path), BUNDLE_SCHEMA, producer=producer)
        splits = {
            name: [LabeledMolecule.from_smiles(row['smiles'], row['label']) for row in data['splits'][name]]
            for name in SPLITS
        }
        return cls(
            explain_class=data['explain_class'],
            elements=tuple(data['elements']),
            provenance=data['provenance'],
            config_hash=data['config_hash'],
            **splits,
        )


def read_labelled_csv(path):
    """Rows of a ``smiles,label`` CSV as a DataFrame of strings"""
    path = Path(path)
    if not path.is_file():
        raise DatasetError(f"dataset file {path} does not exist", code='missing_csv')
    frame = pd.read_csv(path, dtype=str, keep_default_na=False)
    frame.columns = [column.strip().lower() for column in frame.columns]
    missing = {'smiles', 'label'} - set(frame.columns)
    if missing:
        raise DatasetError(f"{path} lacks column(s) {', '.join(sorted(missing))}", code='columns')
    return frame[['smiles', 'label']]


def _parse_rows(frame):
    parsed, skipped = [], 0
    for row_number, (smiles, label) in enumerate(zip(frame['smiles'], frame['label']), start=2):
        label = label.strip()
        if label not in ('0', '1'):
            logger.warning(f"Row {row_number}: label {label!r} is not 0 or 1; skipped")
            skipped += 1
            continue
        try:
            mol = parse_smiles(smiles)
        except ChemistryError as e:
            logger.warning(f"Row {row_number}: {e.message}; skipped")
            skipped += 1
            continue
        parsed.append((mol, int(label)))
    return parsed, skipped


def split_sizes(n, ratios=SPLIT_RATIOS):
    n_train = int(round(n * ratios[0]))
    n_valid = int(round(n * ratios[1]))
    return n_train, n_valid, n - n_train - n_valid


def prep(csv_path, config):
    """
    Parse, filter, deduplicate and split a labelled CSV.

    Rows that fail to parse are skipped and counted; more than 10% skipped
    rows is an error. Molecules that fail the validity check, contain an
    element outside ``config.elements`` or an element seen fewer than
    ``config.min_atom_count`` times across the parsed corpus are dropped.
    Canonical duplicates keep their first occurrence.
    """
    frame = read_labelled_csv(csv_path)
    if frame.empty:
        raise DatasetError(f"{csv_path} has no rows", code='empty')
    parsed, skipped = _parse_rows(frame)
    skip_rate = skipped / len(frame)
    if skip_rate > MAX_SKIP_RATE:
        raise DatasetError(
            f"{skipped} of {len(frame)} rows ({skip_rate:.1%}) could not be used; limit is {MAX_SKIP_RATE:.0%}",
            code='skip_rate'
        )

    valid = [(mol, label) for mol, label in parsed if check_validity(mol).valid]
    dropped_invalid = len(parsed) - len(valid)

    element_counts = Counter()
    for mol, _ in valid:
        element_counts.update(mol.element_counts())
    allowed = {
        element for element, count in element_counts.items()
        if count >= config.min_atom_count and element in config.elements
    }
    rare = sorted(set(element_counts) - allowed)
    kept = [(mol, label) for mol, label in valid if set(mol.element_counts()) <= allowed]
    dropped_elements = len(valid) - len(kept)
    if rare:
        logger.info(f"Dropping {dropped_elements} molecules containing rare or unsupported elements {rare}")

    seen, unique = set(), []
    for mol, label in kept:
        key = canonical_key(mol)
        if key in seen:
            continue
        seen.add(key)
        unique.append(LabeledMolecule(key, label, mol))
    duplicates = len(kept) - len(unique)
    if not unique:
        raise DatasetError("no molecules survived filtering", code='empty_after_filter')

    order = config.streams().stream('prep-split').permutation(len(unique))
    shuffled = [unique[i] for i in order]
    n_train, n_valid, _ = split_sizes(len(shuffled))
    bundle = DatasetBundle(
        train=shuffled[:n_train],
        valid=shuffled[n_train:n_train + n_valid],
        test=shuffled[n_train + n_valid:],
        explain_class=config.explain_class,
        config_hash=config.config_hash(),
        elements=tuple(e for e in config.elements if e in allowed),
        provenance={
            'source': Path(csv_path).name,
            'source_sha256': sha256_file(csv_path),
            'rows': len(frame),
            'skipped_rows': skipped,
            'dropped_invalid': dropped_invalid,
            'dropped_rare_elements': dropped_elements,
            'rare_elements': rare,
            'min_atom_count': config.min_atom_count,
            'duplicates_removed': duplicates,
            'split_seed': config.seed,
        },
    )
    bundle.provenance['sizes'] = bundle.sizes()
    logger.info(f"Prepared {len(unique)} molecules: {bundle.sizes()}")
    return bundle
