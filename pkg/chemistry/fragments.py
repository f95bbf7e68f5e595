"""
Principal-subgraph vocabulary: frequency-merge mining, greedy decomposition
of molecules into non-overlapping fragments, and reassembly.
"""

import logging
from collections import Counter
from dataclasses import dataclass
from functools import cached_property
from pathlib import Path

from networkx.algorithms import isomorphism

from core.exceptions import VocabularyError
from core.utils import read_json, write_json
from .canonical import canonical_key
from .molecule import Molecule
from .smiles import parse_smiles

logger = logging.getLogger(__name__)

VOCAB_SCHEMA = {
    'type': 'array',
    'minItems': 1,
    'items': {
        'type': 'object',
        'required': ['smiles', 'frequency', 'id'],
        'properties': {
            'smiles': {'type': 'string', 'minLength': 1},
            'frequency': {'type': 'integer', 'minimum': 1},
            'id': {'type': 'integer', 'minimum': 0},
        },
    },
}


def _node_match(a, b):
    return a['element'] == b['element'] and a['charge'] == b['charge']


def _edge_match(a, b):
    return a['order'] == b['order']


class VocabEntry:
    """One fragment; ``molecule`` atom order is the pattern order decompositions refer to"""

    def __init__(self, id, smiles, frequency):
        self.id = id
        self.smiles = smiles
        self.frequency = frequency
        self.molecule = parse_smiles(smiles)

    def __repr__(self):
        return f"VocabEntry({self.id}, {self.smiles!r}, frequency={self.frequency})"

    @property
    def size(self):
        return self.molecule.num_atoms

    @cached_property
    def graph(self):
        return self.molecule.to_networkx()

    @cached_property
    def atom_counts(self):
        return Counter(self.molecule.atoms)

    def to_dict(self):
        return {'smiles': self.smiles, 'frequency': self.frequency, 'id': self.id}


class FragmentVocab:
    """
    Ordered fragment list. Ids are positions; the STOP token id is ``len(vocab)``.
    """

    def __init__(self, entries):
        self.entries = list(entries)
        self._by_key = {}
        for position, entry in enumerate(self.entries):
            if entry.id != position:
                raise VocabularyError(f"entry {entry.smiles} has id {entry.id}, expected {position}", code='bad_id')
            if entry.frequency <= 0:
                raise VocabularyError(f"entry {entry.smiles} has non-positive frequency", code='bad_frequency')
            if entry.smiles in self._by_key:
                raise VocabularyError(f"duplicate vocabulary entry {entry.smiles}", code='duplicate')
            self._by_key[entry.smiles] = entry.id
        self._single = {
            entry.molecule.atoms[0]: entry.id for entry in self.entries if entry.size == 1
        }

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, vocab_id):
        return self.entries[vocab_id]

    def __contains__(self, key):
        return key in self._by_key

    def __iter__(self):
        return iter(self.entries)

    def index(self, key):
        return self._by_key[key]

    @property
    def stop_id(self):
        return len(self.entries)

    @property
    def num_tokens(self):
        return len(self.entries) + 1

    @property
    def atom_types(self):
        return set(self._single)

    def single_atom_id(self, atom):
        try:
            return self._single[atom]
        except KeyError:
            label = atom.element + ('' if atom.charge == 0 else f"{atom.charge:+d}")
            raise VocabularyError(f"no single-atom fragment for {label}", code='unmatched_element') from None

    @cached_property
    def match_order(self):
        """Multi-atom entries, largest first, then more frequent, then lower id"""
        multi = [entry for entry in self.entries if entry.size > 1]
        return sorted(multi, key=lambda e: (-e.size, -e.frequency, e.id))

    def prefix(self, size):
        return FragmentVocab(self.entries[:size])

    def to_json(self):
        return [entry.to_dict() for entry in self.entries]

    @classmethod
    def from_json(cls, data):
        ordered = sorted(data, key=lambda item: item['id'])
        return cls(VocabEntry(item['id'], item['smiles'], item['frequency']) for item in ordered)

    def save(self, path):
        return write_json(path, self.to_json())

    @classmethod
    def load(cls, path, producer='mine_vocab'):
        return cls.from_json(read_json(Path(path), VOCAB_SCHEMA, producer=producer))

    def union(self, fragment_ids):
        """
        Disjoint union of the given fragments, placed consecutively.

        Returns the molecule and, per atom, the position of its fragment.
        """
        atoms, bonds, owner = [], [], []
        for position, vocab_id in enumerate(fragment_ids):
            pattern = self.entries[vocab_id].molecule
            offset = len(atoms)
            atoms.extend(pattern.atoms)
            owner.extend([position] * pattern.num_atoms)
            bonds.extend((offset + b.i, offset + b.j, b.order) for b in pattern.bonds)
        return Molecule(atoms, bonds), owner


class _PieceGraph:
    """Current fragmentation of one corpus molecule during mining"""

    def __init__(self, mol, max_atoms):
        self.mol = mol
        self.max_atoms = max_atoms
        self.pieces = {i: frozenset([i]) for i in range(mol.num_atoms)}
        self.owner = list(range(mol.num_atoms))
        self.next_id = mol.num_atoms
        self.pairs = {}
        for bond in mol.bonds:
            self._add_pair(bond.i, bond.j)

    def _add_pair(self, p, q):
        pair = (min(p, q), max(p, q))
        if pair in self.pairs:
            return None
        atoms = self.pieces[p] | self.pieces[q]
        if len(atoms) > self.max_atoms:
            return None
        key = canonical_key(self.mol.subgraph(sorted(atoms)))
        self.pairs[pair] = key
        return key

    def neighbours(self, pid):
        found = set()
        for atom in self.pieces[pid]:
            for other, _ in self.mol.adjacency[atom]:
                found.add(self.owner[other])
        found.discard(pid)
        return sorted(found)

    def merge(self, key, counts):
        """Merge every still-available pair whose union has ``key``; updates ``counts``"""
        merged = 0
        for pair in sorted(p for p, k in self.pairs.items() if k == key):
            if self.pairs.get(pair) != key:
                continue
            p, q = pair
            new = self.next_id
            self.next_id += 1
            atoms = self.pieces.pop(p) | self.pieces.pop(q)
            self.pieces[new] = atoms
            for atom in atoms:
                self.owner[atom] = new
            for stale in [other for other in self.pairs if p in other or q in other]:
                counts[self.pairs.pop(stale)] -= 1
            for neighbour in self.neighbours(new):
                added = self._add_pair(new, neighbour)
                if added is not None:
                    counts[added] += 1
            merged += 1
        return merged


def mine_vocab(molecules, target_size, max_fragment_atoms=10):
    """
    Start from one fragment per atom and repeatedly merge the adjacent
    fragment-pair type that is most frequent across the corpus (ties go to the
    smaller canonical key) until ``target_size`` entries exist or nothing is
    left to merge.
    """
    molecules = list(molecules)
    if not molecules:
        raise VocabularyError("cannot mine a vocabulary from an empty corpus", code='empty_corpus')

    atom_counts = Counter()
    for mol in molecules:
        for atom in mol.atoms:
            atom_counts[canonical_key(Molecule([atom]))] += 1
    singles = sorted(atom_counts)
    if target_size < len(singles):
        raise VocabularyError(
            f"target size {target_size} is below the {len(singles)} atom types in the corpus",
            code='target_too_small'
        )

    entries = [[key, atom_counts[key]] for key in singles]
    known = {key: position for position, (key, _) in enumerate(entries)}
    graphs = [_PieceGraph(mol, max_fragment_atoms) for mol in molecules]
    counts = Counter()
    for graph in graphs:
        counts.update(graph.pairs.values())

    while len(entries) < target_size:
        live = [(count, key) for key, count in counts.items() if count > 0]
        if not live:
            logger.info(f"Vocabulary mining stopped at {len(entries)} entries: no mergeable pairs left")
            break
        best = max(count for count, _ in live)
        key = min(k for count, k in live if count == best)
        merged = sum(graph.merge(key, counts) for graph in graphs)
        if key not in known:
            known[key] = len(entries)
            entries.append([key, merged])
            logger.debug(f"Merged {key} ({best} candidate pairs, {merged} merges)")

    return FragmentVocab(VocabEntry(i, key, frequency) for i, (key, frequency) in enumerate(entries))


@dataclass(frozen=True)
class Decomposition:
    """
    ``fragments``: ``(vocab id, atoms)`` with ``atoms[p]`` the molecule atom
    matched to pattern atom ``p``, ordered by smallest contained atom index.
    ``inter_bonds``: ``(i, j, order)`` bonds joining different fragments.
    """
    fragments: tuple
    inter_bonds: tuple
    num_atoms: int

    @property
    def fragment_ids(self):
        return [vocab_id for vocab_id, _ in self.fragments]

    def owner(self):
        table = [None] * self.num_atoms
        for position, (_, atoms) in enumerate(self.fragments):
            for atom in atoms:
                table[atom] = position
        return table


def decompose(mol, vocab):
    """Greedy largest-fragment-first cover of ``mol`` by vocabulary fragments"""
    assigned = [None] * mol.num_atoms
    remaining = Counter(mol.atoms)
    graph = mol.to_networkx()
    claimed = []

    for entry in vocab.match_order:
        if entry.size > sum(remaining.values()):
            continue
        if any(remaining[atom] < count for atom, count in entry.atom_counts.items()):
            continue
        free = [i for i in range(mol.num_atoms) if assigned[i] is None]
        matcher = isomorphism.GraphMatcher(
            graph.subgraph(free), entry.graph, node_match=_node_match, edge_match=_edge_match
        )
        matches = {}
        for mapping in matcher.subgraph_isomorphisms_iter():
            atoms = frozenset(mapping)
            if atoms not in matches:
                inverse = {pattern: atom for atom, pattern in mapping.items()}
                matches[atoms] = tuple(inverse[p] for p in range(entry.size))
        for atoms in sorted(matches, key=sorted):
            if any(assigned[a] is not None for a in atoms):
                continue
            for a in atoms:
                assigned[a] = entry.id
                remaining[mol.atoms[a]] -= 1
            claimed.append((entry.id, matches[atoms]))

    for index, atom in enumerate(mol.atoms):
        if assigned[index] is None:
            claimed.append((vocab.single_atom_id(atom), (index,)))

    claimed.sort(key=lambda item: min(item[1]))
    owner = {}
    for position, (_, atoms) in enumerate(claimed):
        for atom in atoms:
            owner[atom] = position
    inter = tuple((b.i, b.j, b.order) for b in mol.bonds if owner[b.i] != owner[b.j])
    return Decomposition(tuple(claimed), inter, mol.num_atoms)


def compose(decomposition, vocab):
    """Rebuild the molecule a decomposition was taken from (same atom indices)"""
    atoms = [None] * decomposition.num_atoms
    bonds = []
    for vocab_id, placed in decomposition.fragments:
        pattern = vocab[vocab_id].molecule
        for p, atom in enumerate(placed):
            atoms[atom] = pattern.atoms[p]
        bonds.extend((placed[b.i], placed[b.j], b.order) for b in pattern.bonds)
    bonds.extend(decomposition.inter_bonds)
    if any(atom is None for atom in atoms):
        raise VocabularyError("decomposition does not cover every atom", code='incomplete')
    return Molecule(atoms, bonds)
