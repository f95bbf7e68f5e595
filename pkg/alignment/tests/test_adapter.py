import math
import tempfile
from pathlib import Path

import numpy as np
from django.test import SimpleTestCase

from alignment.adapter import AdapterModel, GaussianPolicy, shifted_latent
from alignment.chain import ChainStep, GenerativeChain, next_state
from chemistry.fragments import mine_vocab
from chemistry.smiles import parse_smiles
from chemistry.synthetic import random_molecule
from core.config import RunConfig
from core.exceptions import ConfigError, ShapeError
from core.numkit import ComputationTape, Tensor, precision, tsum
from core.numkit.gradcheck import check_gradients
from generator.decoding import DecodeFailure
from generator.vae import LatentGaussian, VaeModel

ELEMENTS = ('C', 'N', 'O')


class GaussianPolicyTests(SimpleTestCase):
    def test_log_prob_at_the_mean(self):
        policy = GaussianPolicy(np.array([0.3, -1.0]), np.array([0.5, 2.0]))
        expected = -sum(math.log(s * math.sqrt(2 * math.pi)) for s in (0.5, 2.0))
        self.assertAlmostEqual(policy.log_prob(policy.mean), expected)

    def test_log_prob_one_std_away(self):
        policy = GaussianPolicy(np.zeros(1), np.ones(1))
        self.assertAlmostEqual(policy.log_prob([1.0]), -0.5 - 0.5 * math.log(2 * math.pi))


class ShiftTests(SimpleTestCase):
    gaussian = LatentGaussian(np.array([0.0, 1.0]), np.array([0.1, -0.2]))

    def test_moves_the_mean_only(self):
        shifted = shifted_latent(self.gaussian, np.array([1.0, -1.0]))
        np.testing.assert_array_equal(shifted.mu, [1.0, 0.0])
        np.testing.assert_array_equal(shifted.log_sigma, self.gaussian.log_sigma)

    def test_shifts_add_up(self):
        a, b = np.array([0.5, 0.25]), np.array([-1.0, 2.0])
        twice = shifted_latent(shifted_latent(self.gaussian, a), b)
        np.testing.assert_allclose(twice.mu, shifted_latent(self.gaussian, a + b).mu)

    def test_shape_mismatch(self):
        with self.assertRaises(ShapeError):
            shifted_latent(self.gaussian, np.zeros(3))


class AdapterModelTests(SimpleTestCase):
    def setUp(self):
        self.rng = np.random.default_rng(0)

    def test_zero_weights_give_zero_policy_and_value(self):
        adapter = AdapterModel(6, 3, hidden=5)
        h = self.rng.standard_normal(6)
        np.testing.assert_array_equal(adapter.policy_dist(h).mean, np.zeros(3))
        np.testing.assert_allclose(adapter.policy_dist(h).std, np.full(3, 0.5))
        self.assertEqual(adapter.critic_value(h), 0.0)

    def test_zero_init_starts_from_the_unshifted_generator(self):
        adapter = AdapterModel(6, 3, hidden=5, init='zero', rng=self.rng)
        np.testing.assert_array_equal(adapter.policy_dist(self.rng.standard_normal(6)).mean, np.zeros(3))
        random = AdapterModel(6, 3, hidden=5, init='random', rng=self.rng)
        self.assertGreater(np.abs(random.policy_dist(self.rng.standard_normal(6)).mean).sum(), 0.0)

    def test_auto_is_resolved_before_construction(self):
        with self.assertRaises(ConfigError):
            AdapterModel(6, 3, init='auto')
        self.assertEqual(RunConfig().resolved_adapter_init(), 'zero')
        self.assertEqual(RunConfig(no_adapter_training=True).resolved_adapter_init(), 'random')

    def test_batched_log_prob_matches_policy(self):
        adapter = AdapterModel(4, 2, hidden=3, init='random', rng=self.rng)
        h = self.rng.standard_normal((3, 4))
        actions = self.rng.standard_normal((3, 2))
        batched = adapter.log_prob(Tensor(h), actions).data
        single = [adapter.policy_dist(h[b]).log_prob(actions[b]) for b in range(3)]
        np.testing.assert_allclose(batched, single, rtol=1e-5)

    def test_wrong_input_width(self):
        with self.assertRaises(ShapeError):
            AdapterModel(4, 2, hidden=3).policy_dist(np.zeros(5))

    def test_gradients(self):
        with precision(np.float64):
            adapter = AdapterModel(4, 2, hidden=3, init='random', rng=self.rng)
            h = Tensor(self.rng.standard_normal((5, 4)))
            actions = self.rng.standard_normal((5, 2))
            q = self.rng.standard_normal(5)
            tensors = [adapter.params[name] for name in adapter.params]

            def loss():
                error = adapter.values(h) - q
                return tsum(adapter.log_prob(h, actions)) + tsum(error * error)

            self.assertLess(check_gradients(loss, tensors), 1e-5)

    def test_log_std_gradient_at_the_mean(self):
        adapter = AdapterModel(4, 2, hidden=3, rng=None)
        h = Tensor(np.zeros((1, 4)))
        adapter.params.zero_grad()
        with ComputationTape() as tape:
            tape.backward(tsum(adapter.log_prob(h, np.zeros((1, 2)))))
        np.testing.assert_allclose(adapter.params['policy.log_std'].grad, [-1.0, -1.0])

    def test_checkpoint_round_trip(self):
        adapter = AdapterModel(4, 2, hidden=3, init='random', rng=self.rng)
        with tempfile.TemporaryDirectory() as tmp:
            loaded = AdapterModel.load(adapter.save(Path(tmp) / 'adapter.ckpt', trained=False))
        self.assertEqual(loaded.metadata(), adapter.metadata())
        self.assertTrue(loaded.params.frozen)
        h = self.rng.standard_normal(4)
        np.testing.assert_array_equal(loaded.policy_dist(h).mean, adapter.policy_dist(h).mean)


class ChainTests(SimpleTestCase):
    @classmethod
    def setUpClass(cls):
        super().setUpClass()
        rng = np.random.default_rng(0)
        molecules = [random_molecule(rng, max_atoms=8, elements=ELEMENTS, weights=(0.6, 0.2, 0.2))
                     for _ in range(30)]
        vocab = mine_vocab(molecules, 10)
        cls.vae = VaeModel(vocab, ELEMENTS, latent_dim=3, hidden=6, layers=1, n_max=5, rng=rng)
        cls.vae.params.freeze()

    def test_without_adapter_actions_are_zero(self):
        chain = GenerativeChain(self.vae, beam=2)
        action, log_prob = chain.act(np.zeros(6), np.random.default_rng(0))
        np.testing.assert_array_equal(action, np.zeros(3))
        self.assertEqual(log_prob, 0.0)

    def test_mean_action_mode(self):
        adapter = AdapterModel(6, 3, hidden=4, init='random', rng=np.random.default_rng(1))
        chain = GenerativeChain(self.vae, adapter, beam=2)
        h = np.random.default_rng(2).standard_normal(6)
        action, log_prob = chain.act(h, np.random.default_rng(0))
        policy = adapter.policy_dist(h)
        np.testing.assert_array_equal(action, policy.mean)
        self.assertAlmostEqual(log_prob, policy.log_prob(policy.mean))

    def test_step_shifts_the_encoded_latent(self):
        adapter = AdapterModel(6, 3, hidden=4, init='random', rng=np.random.default_rng(1))
        chain = GenerativeChain(self.vae, adapter, beam=2)
        state = parse_smiles('CCO')
        step = chain.step(state, np.random.default_rng(0))
        gaussian, _ = self.vae.encode(state)
        np.testing.assert_allclose(step.gaussian.mu, gaussian.mu + step.action, rtol=1e-6)
        self.assertIs(step.state, state)

    def test_unknown_action_mode(self):
        with self.assertRaises(ConfigError):
            GenerativeChain(self.vae, action_mode='greedy')

    def test_failed_decode_keeps_the_state(self):
        state = parse_smiles('CC')
        failed = ChainStep(state, np.zeros(6), np.zeros(3), 0.0, None, DecodeFailure('no candidate'))
        self.assertFalse(failed.decoded)
        self.assertIs(next_state(failed), state)
        moved = ChainStep(state, np.zeros(6), np.zeros(3), 0.0, None, parse_smiles('CCO'))
        self.assertEqual(next_state(moved), parse_smiles('CCO'))
