import networkx as nx
import numpy as np
from django.test import SimpleTestCase

from chemistry.molecule import Atom, Molecule
from chemistry.smiles import parse_smiles, write_smiles, write_smiles_with_order
from chemistry.synthetic import random_molecule
from core.exceptions import ChemistryError, SmilesError


def isomorphic(a, b):
    return nx.is_isomorphic(
        a.to_networkx(), b.to_networkx(),
        node_match=lambda x, y: (x['element'], x['charge']) == (y['element'], y['charge']),
        edge_match=lambda x, y: x['order'] == y['order'],
    )


class ParseTests(SimpleTestCase):
    def test_single_atom(self):
        mol = parse_smiles('C')
        self.assertEqual(mol.atoms, (Atom('C'),))
        self.assertEqual(mol.num_bonds, 0)

    def test_ring(self):
        mol = parse_smiles('C1CC1')
        self.assertEqual(mol.num_atoms, 3)
        self.assertEqual([(b.i, b.j, b.order) for b in mol.bonds], [(0, 1, 1), (0, 2, 1), (1, 2, 1)])

    def test_double_bonds(self):
        mol = parse_smiles('O=C=O')
        self.assertEqual(mol.total_bond_order(1), 4)
        self.assertEqual([b.order for b in mol.bonds], [2, 2])

    def test_branches_and_brackets(self):
        mol = parse_smiles('CC(=O)[O-]')
        self.assertEqual(mol.atoms[3], Atom('O', -1))
        self.assertEqual(mol.bond_order(1, 2), 2)
        self.assertEqual(mol.degree(1), 3)

    def test_percent_ring_closure(self):
        self.assertEqual(parse_smiles('C%12CC%12'), parse_smiles('C1CC1'))

    def test_two_letter_elements(self):
        self.assertEqual(parse_smiles('ClCBr').atoms, (Atom('Cl'), Atom('C'), Atom('Br')))


class ParseErrorTests(SimpleTestCase):
    cases = [
        ('C1CC', 1),
        ('', 0),
        ('c1ccccc1', 0),
        ('CC.C', 2),
        ('CC(C', 2),
        ('C/C=C/C', 1),
        ('[13CH4]', 1),
        ('CC=', 2),
        ('C)C', 1),
        ('C(C)[Xx]', 5),
    ]

    def test_errors_carry_byte_offsets(self):
        for text, offset in self.cases:
            with self.subTest(text=text):
                with self.assertRaises(SmilesError) as ctx:
                    parse_smiles(text)
                self.assertEqual(ctx.exception.offset, offset)
                self.assertEqual(ctx.exception.code, 'smiles')

    def test_unclosed_ring_names_the_digit(self):
        with self.assertRaises(SmilesError) as ctx:
            parse_smiles('C1CC')
        self.assertIn('unclosed ring 1', ctx.exception.message)


class WriteTests(SimpleTestCase):
    def test_single_atom(self):
        self.assertEqual(write_smiles(parse_smiles('C')), 'C')

    def test_charged_atom_in_brackets(self):
        self.assertEqual(write_smiles(Molecule([Atom('C'), Atom('N', 1)], [(0, 1, 1)])), 'C[NH3+]')

    def test_deterministic(self):
        mol = parse_smiles('C1CC(=O)C(N)C1')
        self.assertEqual(write_smiles(mol), write_smiles(mol))

    def test_rejects_disconnected(self):
        with self.assertRaises(ChemistryError) as ctx:
            write_smiles(Molecule([Atom('C'), Atom('O')]))
        self.assertEqual(ctx.exception.code, 'disconnected')

    def test_round_trip_on_generated_molecules(self):
        rng = np.random.default_rng(11)
        for _ in range(500):
            mol = random_molecule(rng)
            self.assertTrue(isomorphic(parse_smiles(write_smiles(mol)), mol), write_smiles(mol))

    def test_branches_follow_atom_order(self):
        self.assertEqual(write_smiles_with_order(parse_smiles('CC(C)(O)N')), ('CC(C)(O)N', [0, 1, 2, 3, 4]))
        self.assertEqual(write_smiles(parse_smiles('C1CCO1')), 'C1CCO1')

    def test_order_follows_ranks(self):
        text, order = write_smiles_with_order(parse_smiles('CCO'), ranks=[1, 2, 0])
        self.assertEqual(text, 'OCC')
        self.assertEqual(order, [2, 1, 0])

    def test_long_chains_and_deep_branches(self):
        self.assertEqual(write_smiles(parse_smiles('C' * 5000)), 'C' * 5000)
        comb = 'C(C)' * 3000 + 'C'
        self.assertEqual(write_smiles(parse_smiles(comb)), comb)
