import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from chemistry.canonical import canonical_key
from chemistry.fragments import FragmentVocab, VocabEntry, compose, decompose, mine_vocab
from chemistry.molecule import Atom
from chemistry.smiles import parse_smiles
from chemistry.synthetic import random_molecule
from core.exceptions import VocabularyError


class MineVocabTests(SimpleTestCase):
    corpus = [parse_smiles('CCO')] * 5

    def test_singles_come_first(self):
        vocab = mine_vocab(self.corpus, 4)
        self.assertEqual([e.smiles for e in vocab][:2], ['C', 'O'])
        self.assertEqual([e.frequency for e in vocab][:2], [10, 5])

    def test_tie_goes_to_smaller_key(self):
        vocab = mine_vocab(self.corpus, 4)
        self.assertEqual(vocab[2].smiles, min(canonical_key(parse_smiles('CC')), canonical_key(parse_smiles('CO'))))
        self.assertEqual(vocab[2].frequency, 5)
        self.assertEqual(vocab[3].smiles, canonical_key(parse_smiles('CCO')))

    def test_target_equal_to_atom_types(self):
        vocab = mine_vocab(self.corpus, 2)
        self.assertEqual([e.smiles for e in vocab], ['C', 'O'])
        self.assertEqual(vocab.stop_id, 2)
        self.assertEqual(vocab.num_tokens, 3)

    def test_stops_when_nothing_merges(self):
        self.assertEqual(len(mine_vocab(self.corpus, 50)), 4)

    def test_target_too_small(self):
        with self.assertRaises(VocabularyError) as ctx:
            mine_vocab(self.corpus, 1)
        self.assertEqual(ctx.exception.code, 'target_too_small')

    def test_empty_corpus(self):
        with self.assertRaises(VocabularyError):
            mine_vocab([], 5)

    def test_prefix_keeps_order(self):
        vocab = mine_vocab(self.corpus, 4)
        self.assertEqual([e.smiles for e in vocab.prefix(3)], [e.smiles for e in vocab][:3])

    def test_fragment_size_cap(self):
        vocab = mine_vocab(self.corpus, 4, max_fragment_atoms=2)
        self.assertTrue(all(entry.size <= 2 for entry in vocab))

    def test_save_and_load(self):
        vocab = mine_vocab(self.corpus, 4)
        with tempfile.TemporaryDirectory() as tmp:
            loaded = FragmentVocab.load(vocab.save(Path(tmp) / 'vocab.json'))
        self.assertEqual(loaded.to_json(), vocab.to_json())


class VocabTests(SimpleTestCase):
    def test_rejects_bad_ids(self):
        with self.assertRaises(VocabularyError):
            FragmentVocab([VocabEntry(1, 'C', 1)])

    def test_rejects_duplicates(self):
        with self.assertRaises(VocabularyError):
            FragmentVocab([VocabEntry(0, 'C', 1), VocabEntry(1, 'C', 2)])

    def test_missing_single_atom(self):
        vocab = FragmentVocab([VocabEntry(0, 'C', 1)])
        with self.assertRaises(VocabularyError) as ctx:
            vocab.single_atom_id(Atom('S'))
        self.assertEqual(ctx.exception.code, 'unmatched_element')

    def test_union_places_fragments_side_by_side(self):
        vocab = FragmentVocab([VocabEntry(0, 'C', 3), VocabEntry(1, 'O', 1), VocabEntry(2, 'CO', 1)])
        mol, owner = vocab.union([2, 0])
        self.assertEqual(mol.num_atoms, 3)
        self.assertEqual(mol.num_bonds, 1)
        self.assertEqual(owner, [0, 0, 1])


class DecomposeTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        rng = np.random.default_rng(4)
        cls.molecules = [random_molecule(rng) for _ in range(300)]
        cls.vocab = mine_vocab(cls.molecules, 40)

    def test_single_atom(self):
        decomposition = decompose(parse_smiles('C'), self.vocab)
        self.assertEqual(decomposition.fragment_ids, [self.vocab.single_atom_id(Atom('C'))])
        self.assertEqual(decomposition.inter_bonds, ())

    def test_every_atom_in_exactly_one_fragment(self):
        for mol in self.molecules:
            atoms = [atom for _, placed in decompose(mol, self.vocab).fragments for atom in placed]
            self.assertEqual(sorted(atoms), list(range(mol.num_atoms)))

    def test_compose_rebuilds_the_molecule(self):
        for mol in self.molecules:
            self.assertEqual(compose(decompose(mol, self.vocab), self.vocab), mol)

    def test_fragments_match_their_patterns(self):
        for mol in self.molecules[:50]:
            for vocab_id, placed in decompose(mol, self.vocab).fragments:
                pattern = self.vocab[vocab_id].molecule
                self.assertEqual([mol.atoms[a] for a in placed], list(pattern.atoms))

    def test_largest_fragment_is_used(self):
        vocab = mine_vocab([parse_smiles('CCO')] * 3, 4)
        decomposition = decompose(parse_smiles('OCC'), vocab)
        self.assertEqual(decomposition.fragment_ids, [3])
