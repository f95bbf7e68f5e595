import itertools

import numpy as np
from django.test import SimpleTestCase

from chemistry.fingerprints import Fingerprinter, distance
from chemistry.molecule import Atom, Molecule
from chemistry.smiles import parse_smiles
from chemistry.synthetic import random_molecule
from core.exceptions import ChemistryError
from explanations.principles import PrincipleScorer, cost, coverage, local_score
from generator.decoding import DecodeFailure
from .fakes import OxygenClassifier

INPUTS = ['CCN', 'CCCC', 'CNC', 'CCCCC', 'CN']


class ScorerTests(SimpleTestCase):
    def setUp(self):
        self.inputs = [parse_smiles(s) for s in INPUTS]
        self.scorer = PrincipleScorer(self.inputs, OxygenClassifier(), target_class=1, alpha=1.0, beta=10.0,
                                      delta=0.0)

    def test_local_score(self):
        self.assertAlmostEqual(local_score(True, 0.9, 0.2, 1.0, 10.0), 2.9)
        self.assertEqual(local_score(False, 0.9, 0.2, 1.0, 10.0), 0.0)

    def test_candidate_covering_one_of_five(self):
        scorer = PrincipleScorer(self.inputs + [parse_smiles('CCO')], OxygenClassifier(), 1, delta=0.0)
        scored = scorer.score(parse_smiles('OCC'))
        self.assertTrue(scored.valid)
        self.assertTrue(scored.counterfactual)
        self.assertEqual(scored.covered_indices, [5])
        self.assertAlmostEqual(scored.coverage, 1 / 6)
        self.assertAlmostEqual(scored.score, 0.9 + 10.0 / 6)

    def test_score_of_two_point_nine(self):
        inputs = [parse_smiles(s) for s in ('CCO', 'CCCC', 'CNC', 'CCCCC', 'CN')]
        scored = PrincipleScorer(inputs, OxygenClassifier(), 1, delta=0.0).score(parse_smiles('OCC'))
        self.assertAlmostEqual(scored.probability, 0.9)
        self.assertAlmostEqual(scored.coverage, 0.2)
        self.assertAlmostEqual(scored.score, 2.9)

    def test_not_counterfactual(self):
        scored = self.scorer.score(parse_smiles('CCC'))
        self.assertTrue(scored.valid)
        self.assertFalse(scored.counterfactual)
        self.assertAlmostEqual(scored.probability, 0.1)

    def test_invalid_candidates_score_zero(self):
        pentavalent = Molecule([Atom('C')] * 6, [(0, k, 1) for k in range(1, 6)])
        for candidate in (pentavalent, DecodeFailure('nothing decoded'), None, parse_smiles('CS')):
            scored = self.scorer.score(candidate)
            self.assertFalse(scored.valid)
            self.assertEqual(scored.score, 0.0)
            self.assertFalse(scored.counterfactual)

    def test_isomorphic_candidates_share_a_score(self):
        self.assertIs(self.scorer.score(parse_smiles('CCO')), self.scorer.score(parse_smiles('OCC')))
        self.assertEqual(self.scorer.reward(parse_smiles('CCO')), self.scorer.score(parse_smiles('CCO')).score)

    def test_closest_inputs(self):
        closest = self.scorer.closest_inputs(parse_smiles('CCN'), 2)
        self.assertEqual(closest[0], (0, 0.0))
        self.assertEqual(len(closest), 2)
        self.assertLessEqual(closest[0][1], closest[1][1])

    def test_no_inputs(self):
        with self.assertRaises(ChemistryError):
            PrincipleScorer([], OxygenClassifier(), 1)


class SetMetricTests(SimpleTestCase):
    def setUp(self):
        rng = np.random.default_rng(0)
        self.inputs = [random_molecule(rng, max_atoms=7) for _ in range(12)]
        self.candidates = [random_molecule(rng, max_atoms=7) for _ in range(6)]
        self.fingerprinter = Fingerprinter()

    def brute_force(self, candidates, delta):
        nearest = [min(distance(c, g) for c in candidates) for g in self.inputs]
        return sum(d <= delta for d in nearest) / len(self.inputs), sum(nearest) / len(self.inputs)

    def test_matches_pairwise_distances(self):
        for size in (1, 3, 6):
            for subset in itertools.islice(itertools.combinations(self.candidates, size), 5):
                for delta in (0.5, 0.87):
                    expected_coverage, expected_cost = self.brute_force(subset, delta)
                    self.assertAlmostEqual(coverage(subset, self.inputs, delta, self.fingerprinter), expected_coverage)
                    self.assertAlmostEqual(cost(subset, self.inputs, self.fingerprinter), expected_cost)

    def test_candidate_equal_to_every_input(self):
        mol = parse_smiles('CCO')
        self.assertEqual(coverage([mol], [mol, mol], 0.0), 1.0)
        self.assertEqual(cost([mol], [mol, mol]), 0.0)

    def test_more_candidates_never_lower_coverage(self):
        first = coverage(self.candidates[:2], self.inputs, 0.8)
        self.assertGreaterEqual(coverage(self.candidates, self.inputs, 0.8), first)
        self.assertLessEqual(cost(self.candidates, self.inputs), cost(self.candidates[:2], self.inputs))

    def test_edge_cases(self):
        self.assertEqual(coverage([], self.inputs, 0.5), 0.0)
        with self.assertRaises(ChemistryError):
            coverage(self.candidates, [], 0.5)
        with self.assertRaises(ChemistryError):
            cost([], self.inputs)
        with self.assertRaises(ChemistryError):
            cost(self.candidates, [])
