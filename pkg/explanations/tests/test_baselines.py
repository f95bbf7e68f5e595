import math

import numpy as np
from django.test import SimpleTestCase

from alignment.chain import GenerativeChain
from chemistry.fragments import mine_vocab
from chemistry.molecule import check_validity
from chemistry.smiles import parse_smiles
from chemistry.synthetic import random_molecule
from core.config import RunConfig
from core.exceptions import ConfigError
from core.rng import RandomStreams
from explanations.baselines import (
    SaSchedule, apply_edit, legal_edits, metropolis_acceptance, random_edit, sa_baseline, sample_baseline,
    walk_baseline,
)
from explanations.pools import CandidatePool
from explanations.principles import PrincipleScorer
from generator.vae import VaeModel
from .fakes import OxygenClassifier

ELEMENTS = ('C', 'N', 'O')


class AnnealingScheduleTests(SimpleTestCase):
    def test_halving(self):
        schedule = SaSchedule()
        self.assertEqual(schedule.temperature(0), 0.1)
        self.assertEqual(schedule.temperature(9), 0.1)
        self.assertAlmostEqual(schedule.temperature(10), 0.05)
        self.assertAlmostEqual(schedule.temperature(25), 0.025)

    def test_from_config(self):
        schedule = SaSchedule.from_config(RunConfig(sa_initial_temperature=2.0, sa_halving_period=3))
        self.assertEqual(schedule.temperature(3), 1.0)

    def test_validation(self):
        with self.assertRaises(ConfigError):
            SaSchedule(initial=0.0)
        with self.assertRaises(ConfigError):
            SaSchedule(period=0)

    def test_metropolis(self):
        self.assertAlmostEqual(metropolis_acceptance(-0.1, 0.1), math.exp(-1))
        self.assertEqual(metropolis_acceptance(0.3, 0.1), 1.0)
        self.assertEqual(metropolis_acceptance(0.0, 0.1), 1.0)
        self.assertLess(metropolis_acceptance(-1.0, 1e-6), 1e-300)


class EditTests(SimpleTestCase):
    def test_single_atom_is_never_deleted(self):
        edits = legal_edits(parse_smiles('C'), ELEMENTS)
        self.assertFalse([e for e in edits if e[0] == 'delete_atom'])
        self.assertEqual(sorted(e[2] for e in edits), sorted(ELEMENTS))

    def test_leaf_deletion_and_bond_edits(self):
        edits = legal_edits(parse_smiles('CCO'), ELEMENTS)
        self.assertIn(('delete_atom', 0), edits)
        self.assertIn(('delete_atom', 2), edits)
        self.assertNotIn(('delete_atom', 1), edits)
        self.assertIn(('bond', 0, 2, 1), edits)
        self.assertEqual(apply_edit(parse_smiles('CCO'), ('bond', 1, 2, 2)), parse_smiles('CC=O'))

    def test_random_edits_stay_valid(self):
        rng = np.random.default_rng(0)
        mol = parse_smiles('CC')
        for _ in range(100):
            mol = random_edit(mol, ELEMENTS, rng)
            self.assertIsNotNone(mol)
            self.assertTrue(check_validity(mol).valid)
            self.assertGreaterEqual(mol.num_atoms, 1)


class BaselineRunTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        rng = np.random.default_rng(0)
        molecules = [random_molecule(rng, max_atoms=8, elements=ELEMENTS, weights=(0.6, 0.2, 0.2))
                     for _ in range(30)]
        vocab = mine_vocab(molecules, 10)
        vae = VaeModel(vocab, ELEMENTS, latent_dim=3, hidden=6, layers=1, n_max=5, rng=rng)
        vae.params.freeze()
        cls.chain = GenerativeChain(vae, beam=2)
        cls.inputs = [parse_smiles(s) for s in ('CCN', 'CCCC', 'NCCN')]
        cls.config = RunConfig(elements=ELEMENTS)

    def scorer(self):
        return PrincipleScorer(self.inputs, OxygenClassifier(), target_class=1, delta=0.9)

    def pool(self, method):
        return CandidatePool.for_run(method, self.config, self.inputs, explain_class=0)

    def assertOnlyCounterfactuals(self, pool, scorer):
        for mol in pool.molecules():
            scored = scorer.score(mol)
            self.assertTrue(scored.valid)
            self.assertTrue(scored.counterfactual)

    def test_walk(self):
        scorer = self.scorer()
        pool = walk_baseline(self.inputs, scorer, 60, RandomStreams(0), self.pool('walk'), ELEMENTS)
        self.assertOnlyCounterfactuals(pool, scorer)
        self.assertGreater(len(pool), 0)
        self.assertTrue(all(entry.input_index < len(self.inputs) for entry in pool.entries))

    def test_walk_is_reproducible(self):
        first = walk_baseline(self.inputs, self.scorer(), 30, RandomStreams(3), self.pool('walk'), ELEMENTS)
        second = walk_baseline(self.inputs, self.scorer(), 30, RandomStreams(3), self.pool('walk'), ELEMENTS)
        self.assertEqual(first.to_json(), second.to_json())

    def test_sample(self):
        scorer = self.scorer()
        pool = sample_baseline(self.inputs, self.chain, scorer, 3, RandomStreams(0), self.pool('sample'))
        self.assertOnlyCounterfactuals(pool, scorer)
        self.assertLessEqual(len(pool), len(self.inputs))

    def test_annealing(self):
        scorer = self.scorer()
        for literal in (False, True):
            pool = sa_baseline(self.inputs, self.chain, scorer, 3, SaSchedule(), RandomStreams(0),
                               self.pool('sa'), literal_input=literal)
            self.assertOnlyCounterfactuals(pool, scorer)
            self.assertTrue(all(entry.step < 3 for entry in pool.entries))
