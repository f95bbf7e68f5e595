"""
Reader and writer for kekulized SMILES.

Supported: organic-subset atoms, bracket atoms with charge and H count,
``-`` ``=`` ``#`` bonds, branches, ring closures (digits and ``%nn``).
Aromatic lowercase atoms, stereo marks, isotopes, atom classes and ``.``
are rejected with the byte offset of the offending token.
"""

from core.exceptions import ChemistryError, SmilesError
from .molecule import ATOMIC_NUMBERS, Atom, Molecule, implicit_hydrogens

ORGANIC_SUBSET = ('B', 'C', 'N', 'O', 'P', 'S', 'F', 'Cl', 'Br', 'I')
AROMATIC_SYMBOLS = ('b', 'c', 'n', 'o', 'p', 's')
BOND_SYMBOLS = {'-': 1, '=': 2, '#': 3}
ORDER_SYMBOLS = {1: '', 2: '=', 3: '#'}
MAX_RING_DIGIT = 99


class _Parser:
    def __init__(self, text):
        self.text = text
        self.pos = 0
        self.atoms = []
        self.bonds = {}
        self.branches = []
        self.rings = {}
        self.previous = None
        self.pending = None
        self.last = None

    def fail(self, message, pos=None):
        pos = self.pos if pos is None else pos
        raise SmilesError(message, len(self.text[:pos].encode('utf-8')))

    def parse(self):
        if not self.text:
            self.fail("empty SMILES")
        while self.pos < len(self.text):
            ch = self.text[self.pos]
            if ch == '(':
                self.open_branch()
            elif ch == ')':
                self.close_branch()
            elif ch in BOND_SYMBOLS:
                self.bond_symbol(ch)
            elif ch in '/\\':
                self.fail(f"stereo bond '{ch}' is not supported")
            elif ch == '@':
                self.fail("chirality marks are not supported")
            elif ch == ':':
                self.fail("aromatic bond ':' is not supported")
            elif ch == '$':
                self.fail("quadruple bonds are not supported")
            elif ch == '.':
                self.fail("disconnected structures ('.') are not supported")
            elif ch.isdigit() or ch == '%':
                self.ring_closure()
            elif ch == '[':
                self.bracket_atom()
            elif ch.isalpha():
                self.organic_atom()
            else:
                self.fail(f"unexpected character {ch!r}")

        if self.pending is not None:
            self.fail("dangling bond", self.pending[1])
        if self.branches:
            self.fail("unclosed branch", self.branches[-1][1])
        if self.rings:
            number, (_, _, offset) = min(self.rings.items(), key=lambda item: item[1][2])
            self.fail(f"unclosed ring {number}", offset)
        return Molecule(self.atoms, [(i, j, order) for (i, j), order in self.bonds.items()])

    def add_bond(self, i, j, order, pos):
        key = (min(i, j), max(i, j))
        if key in self.bonds:
            self.fail(f"duplicate bond between atoms {key[0]} and {key[1]}", pos)
        self.bonds[key] = order

    def add_atom(self, atom, start):
        index = len(self.atoms)
        self.atoms.append(atom)
        if self.previous is not None:
            order = self.pending[0] if self.pending else 1
            self.add_bond(self.previous, index, order, start)
        self.pending = None
        self.previous = index
        self.last = 'atom'

    def open_branch(self):
        if self.previous is None:
            self.fail("branch without a preceding atom")
        if self.pending is not None:
            self.fail("bond symbol before '('")
        self.branches.append((self.previous, self.pos))
        self.pos += 1
        self.last = 'open'

    def close_branch(self):
        if not self.branches:
            self.fail("unmatched ')'")
        if self.last == 'open':
            self.fail("empty branch")
        if self.pending is not None:
            self.fail("dangling bond", self.pending[1])
        self.previous, _ = self.branches.pop()
        self.pos += 1
        self.last = 'close'

    def bond_symbol(self, ch):
        if self.previous is None:
            self.fail("bond without a preceding atom")
        if self.pending is not None:
            self.fail("consecutive bond symbols")
        self.pending = (BOND_SYMBOLS[ch], self.pos)
        self.pos += 1
        self.last = 'bond'

    def ring_closure(self):
        start = self.pos
        if self.text[self.pos] == '%':
            digits = self.text[self.pos + 1:self.pos + 3]
            if len(digits) != 2 or not digits.isdigit():
                self.fail("'%' must be followed by two digits")
            number = int(digits)
            self.pos += 3
        else:
            number = int(self.text[self.pos])
            self.pos += 1
        if self.previous is None:
            self.fail(f"ring closure {number} without a preceding atom", start)

        order = self.pending[0] if self.pending else None
        self.pending = None
        if number in self.rings:
            opener, opening_order, _ = self.rings.pop(number)
            if opener == self.previous:
                self.fail(f"ring closure {number} bonds an atom to itself", start)
            if order is not None and opening_order is not None and order != opening_order:
                self.fail(f"conflicting bond orders for ring closure {number}", start)
            self.add_bond(opener, self.previous, order or opening_order or 1, start)
        else:
            self.rings[number] = (self.previous, order, start)
        self.last = 'ring'

    def organic_atom(self):
        start = self.pos
        two = self.text[self.pos:self.pos + 2]
        ch = self.text[self.pos]
        if two in ('Cl', 'Br'):
            symbol = two
        elif two in ATOMIC_NUMBERS:
            self.fail(f"element {two} must be written in brackets")
        elif ch in ORGANIC_SUBSET:
            symbol = ch
        elif ch in AROMATIC_SYMBOLS:
            self.fail(f"aromatic atom '{ch}' is not supported (use kekulized SMILES)")
        elif ch.isupper():
            self.fail(f"unknown element '{ch}'")
        else:
            self.fail(f"unexpected character {ch!r}")
        self.pos += len(symbol)
        self.add_atom(Atom(symbol, 0), start)

    def bracket_atom(self):
        start = self.pos
        self.pos += 1
        text = self.text
        if self.pos < len(text) and text[self.pos].isdigit():
            self.fail("isotopes are not supported")
        if self.pos >= len(text):
            self.fail("unclosed bracket atom", start)
        ch = text[self.pos]
        if ch.islower():
            self.fail(f"aromatic atom '{ch}' is not supported (use kekulized SMILES)")
        two = text[self.pos:self.pos + 2]
        if len(two) == 2 and two[1].islower():
            if two not in ATOMIC_NUMBERS:
                self.fail(f"unknown element '{two}'")
            symbol = two
        elif ch in ATOMIC_NUMBERS:
            symbol = ch
        else:
            self.fail(f"unknown element '{ch}'")
        self.pos += len(symbol)

        if self.pos < len(text) and text[self.pos] == '@':
            self.fail("chirality marks are not supported")
        if self.pos < len(text) and text[self.pos] == 'H':
            self.pos += 1
            while self.pos < len(text) and text[self.pos].isdigit():
                self.pos += 1

        charge = 0
        if self.pos < len(text) and text[self.pos] in '+-':
            sign = 1 if text[self.pos] == '+' else -1
            self.pos += 1
            if self.pos < len(text) and text[self.pos].isdigit():
                digits_start = self.pos
                while self.pos < len(text) and text[self.pos].isdigit():
                    self.pos += 1
                charge = sign * int(text[digits_start:self.pos])
            else:
                charge = sign
                while self.pos < len(text) and text[self.pos] == text[self.pos - 1]:
                    charge += sign
                    self.pos += 1

        if self.pos < len(text) and text[self.pos] == ':':
            self.fail("atom classes are not supported")
        if self.pos >= len(text) or text[self.pos] != ']':
            self.fail("unclosed bracket atom", start)
        self.pos += 1
        self.add_atom(Atom(symbol, charge), start)


def parse_smiles(text):
    """Parse kekulized SMILES into a Molecule; raises SmilesError with a byte offset"""
    return _Parser(text.strip()).parse()


def _charge_text(charge):
    if charge == 0:
        return ''
    sign = '+' if charge > 0 else '-'
    return sign if abs(charge) == 1 else f"{sign}{abs(charge)}"


def atom_text(mol, index):
    atom = mol.atoms[index]
    if atom.element in ORGANIC_SUBSET and atom.charge == 0:
        return atom.element
    hydrogens = implicit_hydrogens(atom, mol.total_bond_order(index))
    h_text = '' if hydrogens == 0 else ('H' if hydrogens == 1 else f"H{hydrogens}")
    return f"[{atom.element}{h_text}{_charge_text(atom.charge)}]"


def _ring_text(digit):
    return str(digit) if digit < 10 else f"%{digit:02d}"


def write_smiles(mol, ranks=None):
    """
    Depth-first SMILES writer.

    Traversal starts at the lowest-ranked atom and visits neighbours in rank
    order (atom index when ``ranks`` is None). Ring bonds carry their bond
    symbol at the opening digit; digits are reused lowest-first.
    """
    return write_smiles_with_order(mol, ranks)[0]


def write_smiles_with_order(mol, ranks=None):
    """``(smiles, order)`` where ``order`` lists atom indices as they appear in the string"""
    n = mol.num_atoms
    if n == 0:
        raise ChemistryError("cannot write an empty molecule", code='empty')
    if not mol.is_connected():
        raise ChemistryError("cannot write SMILES for a disconnected molecule", code='disconnected')
    ranks = list(range(n)) if ranks is None else list(ranks)

    def neighbours(v):
        return iter(sorted(mol.adjacency[v], key=lambda entry: (ranks[entry[0]], entry[0])))

    visited = [False] * n
    children = [[] for _ in range(n)]
    opens = [[] for _ in range(n)]
    closes = [[] for _ in range(n)]
    ring_edges = set()

    start = min(range(n), key=lambda i: (ranks[i], i))
    visited[start] = True
    stack = [(start, -1, neighbours(start))]
    while stack:
        v, parent, pending = stack[-1]
        for w, _ in pending:
            if w == parent:
                continue
            if visited[w]:
                edge = (min(v, w), max(v, w))
                if edge not in ring_edges:
                    ring_edges.add(edge)
                    opens[w].append(v)
                    closes[v].append(w)
            else:
                children[v].append(w)
                visited[w] = True
                stack.append((w, v, neighbours(w)))
                break
        else:
            stack.pop()

    out = []
    order = []
    held = {}
    in_use = set()
    # entries are atoms to write as (atom, parent) or literal branch parentheses
    todo = [(start, -1)]
    while todo:
        item = todo.pop()
        if isinstance(item, str):
            out.append(item)
            continue
        v, parent = item
        if parent >= 0:
            out.append(ORDER_SYMBOLS[mol.bond_order(parent, v)])
        out.append(atom_text(mol, v))
        order.append(v)
        released = []
        for u in closes[v]:
            digit = held.pop((u, v))
            out.append(_ring_text(digit))
            released.append(digit)
        for w in opens[v]:
            digit = next(d for d in range(1, MAX_RING_DIGIT + 2) if d not in in_use)
            if digit > MAX_RING_DIGIT:
                raise ChemistryError("more than 99 simultaneously open rings", code='ring_digits')
            in_use.add(digit)
            held[(v, w)] = digit
            out.append(ORDER_SYMBOLS[mol.bond_order(v, w)] + _ring_text(digit))
        in_use.difference_update(released)
        kids = children[v]
        if kids:
            todo.append((kids[-1], v))
        for child in reversed(kids[:-1]):
            todo.extend([')', (child, v), '('])

    return ''.join(out), order
