import numpy as np
from django.test import SimpleTestCase

from alignment.adapter import AdapterModel
from alignment.chain import GenerativeChain
from chemistry.fragments import mine_vocab
from chemistry.smiles import parse_smiles
from chemistry.synthetic import random_molecule
from core.config import RunConfig
from core.exceptions import DatasetError
from core.rng import RandomStreams
from datasets.bundle import DatasetBundle, LabeledMolecule
from explanations.inference import explained_inputs, infer
from explanations.pools import CandidatePool
from explanations.principles import PrincipleScorer
from generator.vae import VaeModel
from .fakes import OxygenClassifier

ELEMENTS = ('C', 'N', 'O')


def labeled(*smiles):
    return [LabeledMolecule.from_smiles(s, 0) for s in smiles]


class ExplainedInputTests(SimpleTestCase):
    def setUp(self):
        self.bundle = DatasetBundle(
            train=labeled('CCO', 'CCN'), valid=labeled('CC'), test=labeled('CCCC', 'OCCO', 'NCCN'),
            explain_class=0, elements=ELEMENTS,
        )

    def test_selects_the_predicted_explain_class(self):
        inputs = explained_inputs(self.bundle, OxygenClassifier(), RunConfig(elements=ELEMENTS))
        self.assertEqual(inputs, [parse_smiles('CCCC'), parse_smiles('NCCN')])

    def test_other_split(self):
        config = RunConfig(elements=ELEMENTS, input_split='train')
        self.assertEqual(explained_inputs(self.bundle, OxygenClassifier(), config), [parse_smiles('CCN')])

    def test_no_matching_molecule(self):
        self.bundle.valid = labeled('CO')
        with self.assertRaises(DatasetError) as ctx:
            explained_inputs(self.bundle, OxygenClassifier(), RunConfig(elements=ELEMENTS, input_split='valid'))
        self.assertEqual(ctx.exception.code, 'no_inputs')

    def test_empty_split(self):
        self.bundle.valid = []
        with self.assertRaises(DatasetError) as ctx:
            explained_inputs(self.bundle, OxygenClassifier(), RunConfig(elements=ELEMENTS, input_split='valid'))
        self.assertEqual(ctx.exception.code, 'empty_split')

    def test_bundle_class_wins(self):
        with self.assertLogs('explanations.inference', level='WARNING'):
            inputs = explained_inputs(self.bundle, OxygenClassifier(), RunConfig(elements=ELEMENTS, explain_class=1))
        self.assertEqual(len(inputs), 2)


class InferTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        rng = np.random.default_rng(0)
        molecules = [random_molecule(rng, max_atoms=8, elements=ELEMENTS, weights=(0.6, 0.2, 0.2))
                     for _ in range(30)]
        vocab = mine_vocab(molecules, 10)
        vae = VaeModel(vocab, ELEMENTS, latent_dim=3, hidden=6, layers=1, n_max=5, rng=rng)
        vae.params.freeze()
        adapter = AdapterModel(6, 3, hidden=4, init='random', rng=rng)
        cls.chain = GenerativeChain(vae, adapter, beam=2, action_mode='sample')
        cls.inputs = [parse_smiles(s) for s in ('CCN', 'CCCC', 'NCCN')]
        cls.config = RunConfig(elements=ELEMENTS)

    def scorer(self):
        return PrincipleScorer(self.inputs, OxygenClassifier(), target_class=1, delta=0.9)

    def pool(self):
        return CandidatePool.for_run('adapter', self.config, self.inputs, explain_class=0)

    def test_pool_holds_only_counterfactuals(self):
        scorer = self.scorer()
        pool = infer(self.inputs, self.chain, scorer, 4, RandomStreams(0), self.pool())
        for mol in pool.molecules():
            self.assertTrue(scorer.score(mol).counterfactual)
        for entry in pool.entries:
            self.assertLess(entry.step, 4)
            self.assertLess(entry.input_index, len(self.inputs))

    def test_final_only_keeps_one_state_per_input(self):
        pool = infer(self.inputs, self.chain, self.scorer(), 4, RandomStreams(0), self.pool(), final_only=True)
        indices = [entry.input_index for entry in pool.entries]
        self.assertEqual(len(indices), len(set(indices)))
        self.assertTrue(all(entry.step == 3 for entry in pool.entries))

    def test_same_seed_same_pool(self):
        first = infer(self.inputs, self.chain, self.scorer(), 3, RandomStreams(7), self.pool())
        second = infer(self.inputs, self.chain, self.scorer(), 3, RandomStreams(7), self.pool())
        self.assertEqual(first.to_json(), second.to_json())
