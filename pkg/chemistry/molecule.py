"""
Molecular graphs, the valence-based validity oracle and node/edge featurisation.
"""

from dataclasses import dataclass
from functools import cached_property

import networkx as nx
import numpy as np

from core.exceptions import ChemistryError, FeaturizationError

ATOMIC_NUMBERS = {
    'H': 1, 'Li': 3, 'B': 5, 'C': 6, 'N': 7, 'O': 8, 'F': 9, 'Na': 11, 'Mg': 12, 'Al': 13,
    'Si': 14, 'P': 15, 'S': 16, 'Cl': 17, 'K': 19, 'Ca': 20, 'Fe': 26, 'Cu': 29, 'Zn': 30,
    'As': 33, 'Se': 34, 'Br': 35, 'Sn': 50, 'I': 53,
}

# Allowed total bond orders of neutral atoms
VALENCES = {
    'B': (3,), 'C': (4,), 'N': (3,), 'O': (2,), 'P': (3, 5), 'S': (2, 4, 6),
    'F': (1,), 'Cl': (1,), 'Br': (1,), 'I': (1,),
}

# (element, charge) -> shift applied to every allowed valence
CHARGE_SHIFTS = {('N', 1): 1, ('P', 1): 1, ('O', -1): -1, ('S', -1): -1}

CHARGE_BUCKETS = (-1, 0, 1)
BOND_ORDERS = (1, 2, 3)


@dataclass(frozen=True, order=True)
class Atom:
    element: str
    charge: int = 0

    @property
    def atomic_number(self):
        return ATOMIC_NUMBERS.get(self.element, 0)


@dataclass(frozen=True, order=True)
class Bond:
    i: int
    j: int
    order: int = 1


class Molecule:
    """
    Simple undirected graph of atoms joined by bonds of order 1, 2 or 3.

    Hydrogens are never stored; ``implicit_hydrogens`` derives them from the
    valence table. Instances are immutable and compare by their atom list and
    bond set.
    """

    def __init__(self, atoms, bonds=()):
        atoms = tuple(a if isinstance(a, Atom) else Atom(*a) for a in atoms)
        normalised = {}
        for bond in bonds:
            i, j, order = bond if not isinstance(bond, Bond) else (bond.i, bond.j, bond.order)
            i, j, order = int(i), int(j), int(order)
            if not (0 <= i < len(atoms) and 0 <= j < len(atoms)):
                raise ChemistryError(f"bond ({i}, {j}) references a missing atom", code='bad_bond')
            if i == j:
                raise ChemistryError(f"self-loop on atom {i}", code='bad_bond')
            if order not in BOND_ORDERS:
                raise ChemistryError(f"unsupported bond order {order}", code='bad_bond')
            key = (min(i, j), max(i, j))
            if key in normalised:
                raise ChemistryError(f"duplicate bond between atoms {key[0]} and {key[1]}", code='duplicate_bond')
            normalised[key] = order
        self.atoms = atoms
        self.bonds = tuple(Bond(i, j, order) for (i, j), order in sorted(normalised.items()))

    def __repr__(self):
        return f"Molecule(atoms={len(self.atoms)}, bonds={len(self.bonds)})"

    def __eq__(self, other):
        return isinstance(other, Molecule) and self.atoms == other.atoms and self.bonds == other.bonds

    def __hash__(self):
        return hash((self.atoms, self.bonds))

    @property
    def num_atoms(self):
        return len(self.atoms)

    @property
    def num_bonds(self):
        return len(self.bonds)

    @cached_property
    def adjacency(self):
        """``adjacency[i]`` lists ``(neighbour, order)`` pairs in neighbour order"""
        table = [[] for _ in self.atoms]
        for bond in self.bonds:
            table[bond.i].append((bond.j, bond.order))
            table[bond.j].append((bond.i, bond.order))
        return tuple(tuple(sorted(row)) for row in table)

    @cached_property
    def _orders(self):
        return {(b.i, b.j): b.order for b in self.bonds}

    def bond_order(self, i, j):
        """Order of the bond between ``i`` and ``j`` or 0 when unbonded"""
        return self._orders.get((min(i, j), max(i, j)), 0)

    def degree(self, i):
        return len(self.adjacency[i])

    def total_bond_order(self, i):
        return sum(order for _, order in self.adjacency[i])

    def implicit_hydrogens(self, i):
        return implicit_hydrogens(self.atoms[i], self.total_bond_order(i))

    def element_counts(self):
        counts = {}
        for atom in self.atoms:
            counts[atom.element] = counts.get(atom.element, 0) + 1
        return counts

    def to_networkx(self):
        graph = nx.Graph()
        for index, atom in enumerate(self.atoms):
            graph.add_node(index, element=atom.element, charge=atom.charge)
        for bond in self.bonds:
            graph.add_edge(bond.i, bond.j, order=bond.order)
        return graph

    def is_connected(self):
        if not self.atoms:
            return False
        return nx.is_connected(self.to_networkx())

    def components(self):
        """Atom index sets of the connected components, ordered by smallest member"""
        return sorted((sorted(c) for c in nx.connected_components(self.to_networkx())), key=lambda c: c[0])

    def permute(self, permutation):
        """Relabel atom ``i`` as ``permutation[i]``"""
        permutation = list(permutation)
        if sorted(permutation) != list(range(self.num_atoms)):
            raise ChemistryError("not a permutation of the atom indices", code='bad_permutation')
        atoms = [None] * self.num_atoms
        for old, new in enumerate(permutation):
            atoms[new] = self.atoms[old]
        bonds = [(permutation[b.i], permutation[b.j], b.order) for b in self.bonds]
        return Molecule(atoms, bonds)

    def subgraph(self, indices):
        """Induced sub-molecule over ``indices`` (kept in the given order)"""
        indices = list(indices)
        position = {atom: k for k, atom in enumerate(indices)}
        bonds = [
            (position[b.i], position[b.j], b.order)
            for b in self.bonds if b.i in position and b.j in position
        ]
        return Molecule([self.atoms[i] for i in indices], bonds)

    # editing helpers return new molecules

    def with_atom(self, atom, attach_to=None, order=1):
        atoms = list(self.atoms) + [atom]
        bonds = [(b.i, b.j, b.order) for b in self.bonds]
        if attach_to is not None:
            bonds.append((attach_to, len(atoms) - 1, order))
        return Molecule(atoms, bonds)

    def without_atom(self, index):
        keep = [i for i in range(self.num_atoms) if i != index]
        return self.subgraph(keep)

    def with_bond(self, i, j, order):
        """Add, re-order (``order`` > 0) or remove (``order`` == 0) the bond ``i``-``j``"""
        key = (min(i, j), max(i, j))
        bonds = {(b.i, b.j): b.order for b in self.bonds}
        if order == 0:
            bonds.pop(key, None)
        else:
            bonds[key] = order
        return Molecule(self.atoms, [(a, b, o) for (a, b), o in bonds.items()])


def allowed_valences(atom):
    """Allowed total bond orders for ``atom`` or None when the element/charge is unsupported"""
    base = VALENCES.get(atom.element)
    if base is None:
        return None
    if atom.charge == 0:
        return base
    shift = CHARGE_SHIFTS.get((atom.element, atom.charge))
    if shift is None:
        return None
    return tuple(v + shift for v in base)


def implicit_hydrogens(atom, total_order):
    """Hydrogens filling the remaining valence; 0 for unsupported or saturated atoms"""
    valences = allowed_valences(atom)
    if valences is None:
        return 0
    for valence in valences:
        if valence >= total_order:
            return valence - total_order
    return 0


@dataclass(frozen=True)
class Violation:
    atom: int
    rule: str
    detail: str


@dataclass(frozen=True)
class ValidityReport:
    violations: tuple = ()

    @property
    def valid(self):
        return not self.violations

    def __bool__(self):
        return self.valid


def check_validity(mol):
    """
    Valence, charge and connectivity checks. Molecule-level violations use atom index -1.
    """
    violations = []
    if mol.num_atoms == 0:
        return ValidityReport((Violation(-1, 'empty', 'molecule has no atoms'),))

    for index, atom in enumerate(mol.atoms):
        if atom.element not in VALENCES:
            violations.append(Violation(index, 'element', f"unsupported element {atom.element}"))
            continue
        valences = allowed_valences(atom)
        if valences is None:
            violations.append(Violation(index, 'charge', f"unsupported charge {atom.charge:+d} on {atom.element}"))
            continue
        total = mol.total_bond_order(index)
        if total > max(valences):
            violations.append(Violation(
                index, 'valence', f"{atom.element} has total bond order {total} > {max(valences)}"
            ))

    if not mol.is_connected():
        violations.append(Violation(-1, 'connectivity', f"{len(mol.components())} disconnected components"))
    return ValidityReport(tuple(violations))


def is_valid(mol):
    return check_validity(mol).valid


def free_valence(mol, index):
    """Bond order still available on an atom before it exceeds its largest valence"""
    valences = allowed_valences(mol.atoms[index])
    if valences is None:
        return 0
    return max(valences) - mol.total_bond_order(index)


@dataclass(frozen=True)
class GraphFeatures:
    """Node features plus a directed edge list (each bond appears in both directions)"""
    x: np.ndarray
    senders: np.ndarray
    receivers: np.ndarray
    edge_attr: np.ndarray

    @property
    def num_nodes(self):
        return self.x.shape[0]


def feature_width(elements):
    return len(elements) + len(CHARGE_BUCKETS) + 1


def featurize(mol, elements):
    """
    Node features: one-hot element, one-hot charge in {-1, 0, +1}, degree / 4.
    Edge features: one-hot bond order.
    """
    elements = tuple(elements)
    column = {element: k for k, element in enumerate(elements)}
    x = np.zeros((mol.num_atoms, feature_width(elements)), dtype=np.float64)
    for index, atom in enumerate(mol.atoms):
        if atom.element not in column:
            raise FeaturizationError(
                f"atom {index}: element {atom.element} is outside the configured set {','.join(elements)}",
                code='element'
            )
        if atom.charge not in CHARGE_BUCKETS:
            raise FeaturizationError(f"atom {index}: charge {atom.charge} has no feature bucket", code='charge')
        x[index, column[atom.element]] = 1.0
        x[index, len(elements) + CHARGE_BUCKETS.index(atom.charge)] = 1.0
        x[index, -1] = mol.degree(index) / 4.0

    senders, receivers, edge_attr = [], [], []
    for bond in mol.bonds:
        one_hot = [1.0 if bond.order == order else 0.0 for order in BOND_ORDERS]
        senders += [bond.i, bond.j]
        receivers += [bond.j, bond.i]
        edge_attr += [one_hot, one_hot]
    return GraphFeatures(
        x=x,
        senders=np.asarray(senders, dtype=np.int64),
        receivers=np.asarray(receivers, dtype=np.int64),
        edge_attr=np.asarray(edge_attr, dtype=np.float64).reshape(-1, len(BOND_ORDERS)),
    )
