"""
Canonical atom ranking and the structural key used for deduplication.
"""

from functools import lru_cache

from core.exceptions import ChemistryError
from .smiles import write_smiles_with_order


def _dense_ranks(values):
    index = {value: rank for rank, value in enumerate(sorted(set(values)))}
    return [index[value] for value in values]


def initial_invariants(mol):
    return [
        (atom.element, atom.charge, mol.degree(i), tuple(sorted(order for _, order in mol.adjacency[i])))
        for i, atom in enumerate(mol.atoms)
    ]


def refine(mol, ranks):
    """Iterate neighbourhood refinement until the number of classes stops growing"""
    classes = len(set(ranks))
    while True:
        signatures = [
            (ranks[i], tuple(sorted((order, ranks[j]) for j, order in mol.adjacency[i])))
            for i in range(mol.num_atoms)
        ]
        ranks = _dense_ranks(signatures)
        refined = len(set(ranks))
        if refined == classes:
            return ranks
        classes = refined


def _lowest_tied_class(ranks):
    counts = {}
    for rank in ranks:
        counts[rank] = counts.get(rank, 0) + 1
    tied = [rank for rank, count in counts.items() if count > 1]
    if not tied:
        return None
    rank = min(tied)
    return [i for i, r in enumerate(ranks) if r == rank]


def _individualise(ranks, atom):
    doubled = [2 * r for r in ranks]
    doubled[atom] -= 1
    return _dense_ranks(doubled)


def _leaf_permutation(first, second):
    """Sends the k-th written atom of ``first`` to the k-th written atom of ``second``"""
    perm = [0] * len(first)
    for a, b in zip(first, second):
        perm[a] = b
    return tuple(perm)


def _is_automorphism(mol, perm):
    if any(mol.atoms[i] != mol.atoms[perm[i]] for i in range(mol.num_atoms)):
        return False
    return all(mol.bond_order(perm[b.i], perm[b.j]) == b.order for b in mol.bonds)


def _orbits(atoms, generators):
    """Representative of each atom under the group the generators span"""
    parent = {atom: atom for atom in atoms}

    def find(a):
        while parent.get(a, a) != a:
            a = parent[a]
        return a

    for perm in generators:
        for a in atoms:
            b = perm[a]
            if b in parent:
                ra, rb = find(a), find(b)
                if ra != rb:
                    parent[max(ra, rb)] = min(ra, rb)
    return {atom: find(atom) for atom in atoms}


def canonical_ranking(mol):
    """
    Returns ``(smiles, ranks)`` for the lexicographically smallest SMILES over
    all tie-breaks. Every atom gets a distinct rank.

    Two leaves writing the same SMILES give an automorphism; branches in the
    same orbit under the automorphisms that fix the current path are skipped.
    """
    if mol.num_atoms == 0:
        raise ChemistryError("cannot rank an empty molecule", code='empty')
    if not mol.is_connected():
        raise ChemistryError("canonical key needs a connected molecule", code='disconnected')

    best = None
    seen = {}
    automorphisms = []

    def search(ranks, path):
        nonlocal best
        tied = _lowest_tied_class(ranks)
        if tied is None:
            text, order = write_smiles_with_order(mol, ranks)
            if text in seen:
                perm = _leaf_permutation(seen[text], order)
                if _is_automorphism(mol, perm):
                    automorphisms.append(perm)
            else:
                seen[text] = order
            if best is None or text < best[0]:
                best = (text, ranks)
            return
        explored = set()
        for atom in tied:
            stabiliser = [perm for perm in automorphisms if all(perm[p] == p for p in path)]
            orbit = _orbits(tied, stabiliser)
            if orbit[atom] in {orbit[a] for a in explored}:
                continue
            explored.add(atom)
            search(refine(mol, _individualise(ranks, atom)), path + (atom,))

    search(refine(mol, _dense_ranks(initial_invariants(mol))), ())
    return best


@lru_cache(maxsize=200_000)
def canonical_key(mol):
    """SMILES written from the canonical ranking; equal for isomorphic molecules"""
    return canonical_ranking(mol)[0]
