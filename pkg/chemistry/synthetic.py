"""
Random valid molecules and rule-labelled toy datasets.
"""

import logging

import networkx as nx
import pandas as pd

from core.exceptions import DatasetError
from .canonical import canonical_key
from .molecule import VALENCES, Atom, Molecule
from .smiles import write_smiles

logger = logging.getLogger(__name__)

TOY_ELEMENTS = ('C', 'N', 'O', 'S', 'F', 'Cl')
TOY_WEIGHTS = (0.6, 0.14, 0.14, 0.04, 0.04, 0.04)


def has_n_o_bond(mol):
    return any({mol.atoms[b.i].element, mol.atoms[b.j].element} == {'N', 'O'} for b in mol.bonds)


def contains_oxygen(mol):
    return any(atom.element == 'O' for atom in mol.atoms)


LABEL_RULES = {
    'n-o-bond': has_n_o_bond,
    'contains-o': contains_oxygen,
}


def random_molecule(rng, min_atoms=3, max_atoms=12, elements=TOY_ELEMENTS, weights=TOY_WEIGHTS,
                    ring_probability=0.3, multiple_bond_probability=0.2):
    """
    Grow a random tree of neutral atoms within valence limits, then maybe
    close one ring of size 3 to 7. The result always passes check_validity.
    """
    weights = [w / sum(weights) for w in weights]
    size = int(rng.integers(min_atoms, max_atoms + 1))
    atoms = [str(rng.choice(elements, p=weights))]
    capacity = [max(VALENCES[atoms[0]])]
    bonds = {}

    for new in range(1, size):
        open_atoms = [i for i, free in enumerate(capacity) if free > 0]
        if not open_atoms:
            break
        element = str(rng.choice(elements, p=weights))
        parent = int(rng.choice(open_atoms))
        top = min(capacity[parent], max(VALENCES[element]), 3)
        order = 1
        if top > 1 and rng.random() < multiple_bond_probability:
            order = int(rng.integers(2, top + 1))
        atoms.append(element)
        capacity.append(max(VALENCES[element]) - order)
        capacity[parent] -= order
        bonds[(parent, new)] = order

    if len(atoms) >= 3 and rng.random() < ring_probability:
        graph = nx.Graph(list(bonds))
        lengths = dict(nx.all_pairs_shortest_path_length(graph))
        closable = [
            (i, j) for i in range(len(atoms)) for j in range(i + 1, len(atoms))
            if capacity[i] > 0 and capacity[j] > 0 and 2 <= lengths[i].get(j, 0) <= 6
        ]
        if closable:
            i, j = closable[int(rng.integers(len(closable)))]
            bonds[(i, j)] = 1

    return Molecule([Atom(e) for e in atoms], [(i, j, order) for (i, j), order in bonds.items()])


def generate_toy_dataset(rng, size=500, rule='n-o-bond', positive_fraction=0.5, max_attempts=200_000, **shape):
    """
    Unique random molecules labelled by ``rule``, balanced to ``positive_fraction``.

    Returns a DataFrame with ``smiles`` and ``label`` columns.
    """
    if rule not in LABEL_RULES:
        raise DatasetError(f"unknown labelling rule {rule!r}; choose from {', '.join(LABEL_RULES)}", code='rule')
    labeller = LABEL_RULES[rule]
    want_positive = int(round(size * positive_fraction))
    quota = {1: want_positive, 0: size - want_positive}
    seen = set()
    rows = []
    for _ in range(max_attempts):
        if len(rows) == size:
            break
        mol = random_molecule(rng, **shape)
        label = int(labeller(mol))
        if quota[label] == 0:
            continue
        key = canonical_key(mol)
        if key in seen:
            continue
        seen.add(key)
        quota[label] -= 1
        rows.append({'smiles': write_smiles(mol), 'label': label})
    if len(rows) < size:
        raise DatasetError(f"only generated {len(rows)} of {size} molecules within {max_attempts} attempts",
                           code='toy_exhausted')
    logger.info(f"Generated {size} toy molecules ({want_positive} positive) with rule {rule}")
    return pd.DataFrame(rows, columns=['smiles', 'label'])
