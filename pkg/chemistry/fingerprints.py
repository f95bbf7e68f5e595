"""
Circular fingerprints hashed with 64-bit FNV-1a, and Tanimoto similarity.
"""

from dataclasses import dataclass

from core.exceptions import ChemistryError

FNV_OFFSET = 0xcbf29ce484222325
FNV_PRIME = 0x100000001b3
MASK64 = (1 << 64) - 1


def fnv1a64(values):
    """FNV-1a over each value encoded as 8 little-endian bytes (two's complement)"""
    h = FNV_OFFSET
    for value in values:
        for byte in (value & MASK64).to_bytes(8, 'little'):
            h ^= byte
            h = (h * FNV_PRIME) & MASK64
    return h


@dataclass(frozen=True)
class Fingerprint:
    bits: int
    nbits: int

    def popcount(self):
        return self.bits.bit_count()

    def on_bits(self):
        return [i for i in range(self.nbits) if self.bits >> i & 1]

    def to_hex(self):
        return format(self.bits, f'0{self.nbits // 4}x')

    @classmethod
    def from_hex(cls, text, nbits):
        return cls(int(text, 16), nbits)


def atom_invariant(mol, index):
    atom = mol.atoms[index]
    return fnv1a64([
        atom.atomic_number, atom.charge, mol.degree(index),
        mol.total_bond_order(index), mol.implicit_hydrogens(index),
    ])


def morgan_fingerprint(mol, radius=2, nbits=2048):
    """
    Every round (0..radius) sets bit ``invariant % nbits`` for each atom; each
    later round folds the sorted ``(bond order, neighbour invariant)`` pairs
    into the atom's previous invariant.
    """
    if radius < 0:
        raise ChemistryError("fingerprint radius must be >= 0", code='fp_radius')
    if nbits < 1 or nbits & (nbits - 1):
        raise ChemistryError(f"fingerprint width must be a power of two, got {nbits}", code='fp_width')

    invariants = [atom_invariant(mol, i) for i in range(mol.num_atoms)]
    bits = 0
    for round_ in range(radius + 1):
        if round_ > 0:
            updated = []
            for i in range(mol.num_atoms):
                values = [invariants[i]]
                for order, neighbour in sorted((order, invariants[j]) for j, order in mol.adjacency[i]):
                    values += [order, neighbour]
                updated.append(fnv1a64(values))
            invariants = updated
        for invariant in invariants:
            bits |= 1 << (invariant % nbits)
    return Fingerprint(bits, nbits)


def tanimoto(a, b):
    if a.nbits != b.nbits:
        raise ChemistryError(f"fingerprint widths differ: {a.nbits} != {b.nbits}", code='fp_width')
    union = (a.bits | b.bits).bit_count()
    if union == 0:
        return 1.0
    return (a.bits & b.bits).bit_count() / union


def distance(a, b, radius=2, nbits=2048):
    """1 - Tanimoto between the fingerprints of two molecules"""
    return 1.0 - tanimoto(morgan_fingerprint(a, radius, nbits), morgan_fingerprint(b, radius, nbits))


class Fingerprinter:
    """Memoising fingerprint function for one (radius, nbits) setting"""

    def __init__(self, radius=2, nbits=2048):
        self.radius = radius
        self.nbits = nbits
        self._cache = {}

    def __call__(self, mol):
        fp = self._cache.get(mol)
        if fp is None:
            fp = self._cache[mol] = morgan_fingerprint(mol, self.radius, self.nbits)
        return fp

    def distance(self, a, b):
        return 1.0 - tanimoto(self(a), self(b))

    def distance_matrix(self, rows, cols):
        """``rows`` x ``cols`` nested list of distances"""
        col_fps = [self(c) for c in cols]
        return [[1.0 - tanimoto(self(r), c) for c in col_fps] for r in rows]
