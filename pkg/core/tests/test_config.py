import os
import tempfile
from pathlib import Path
from unittest import mock

from django.test import SimpleTestCase

from core.config import RunConfig, load_config
from core.exceptions import EXIT_CONFIG_ERROR, ConfigError
from core.rng import RandomStreams


class RunConfigTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.env = mock.patch.dict(os.environ, {}, clear=False)
        self.env.start()
        os.environ.pop('CFX_SEED', None)

    def tearDown(self):
        self.env.stop()
        self.tmp.cleanup()

    def write(self, text):
        path = Path(self.tmp.name) / 'run.cfg'
        path.write_text(text)
        return path

    def test_documented_defaults(self):
        config = load_config()
        self.assertEqual(config.delta, 0.87)
        self.assertEqual((config.alpha, config.beta), (1.0, 10.0))
        self.assertEqual(config.latent_dim, 56)
        self.assertEqual(config.adapter_hidden, 400)
        self.assertEqual(config.adapter_lr, 1e-5)
        self.assertEqual((config.gnn_lr, config.gnn_epochs), (0.001, 1000))
        self.assertEqual((config.beam, config.t_infer, config.k), (10, 20, 10))
        self.assertEqual(config.selection_mode, 'set-coverage')

    def test_file_then_flags(self):
        path = self.write('seed=3\ndelta=0.5\nelements=C,N,O\n')
        config = load_config(path, {'seed': '9', 'k': None})
        self.assertEqual(config.seed, 9)
        self.assertEqual(config.delta, 0.5)
        self.assertEqual(config.elements, ('C', 'N', 'O'))
        self.assertEqual(config.k, 10)

    def test_seed_from_environment(self):
        with mock.patch.dict(os.environ, {'CFX_SEED': '7'}):
            self.assertEqual(load_config().seed, 7)
            self.assertEqual(load_config(overrides={'seed': 2}).seed, 2)

    def test_boolean_values(self):
        self.assertTrue(load_config(overrides={'final_only': 'true'}).final_only)
        self.assertFalse(load_config(overrides={'final_only': 'off'}).final_only)

    def test_unknown_file_key(self):
        path = self.write('seed=1\nbogus=2\n')
        with self.assertRaises(ConfigError) as ctx:
            load_config(path)
        self.assertEqual(ctx.exception.code, 'unknown_key')
        self.assertEqual(ctx.exception.exit_code, EXIT_CONFIG_ERROR)

    def test_invalid_values(self):
        bad = [
            {'delta': '1.5'}, {'fp_nbits': '1000'}, {'ppo_clip': '1.0'}, {'selection_mode': 'best'},
            {'k': '0'}, {'explain_class': '2'}, {'seed': 'abc'},
        ]
        for overrides in bad:
            with self.subTest(overrides=overrides), self.assertRaises(ConfigError):
                load_config(overrides=overrides)

    def test_missing_config_file(self):
        with self.assertRaises(ConfigError):
            load_config(Path(self.tmp.name) / 'absent.cfg')

    def test_hash_ignores_paths(self):
        a = RunConfig(run_dir='/tmp/a')
        b = RunConfig(run_dir='/tmp/b', dataset='x.csv')
        self.assertEqual(a.config_hash(), b.config_hash())
        self.assertNotEqual(a.config_hash(), RunConfig(run_dir='/tmp/a', seed=1).config_hash())
        self.assertEqual(len(a.config_hash()), 16)

    def test_target_class_and_adapter_init(self):
        config = RunConfig(explain_class=1)
        self.assertEqual(config.target_class, 0)
        self.assertEqual(config.resolved_adapter_init(), 'zero')
        self.assertEqual(config.replace(no_adapter_training=True).resolved_adapter_init(), 'random')
        self.assertEqual(config.replace(adapter_init='random').resolved_adapter_init(), 'random')


class RandomStreamsTests(SimpleTestCase):
    def test_streams_are_independent_of_request_order(self):
        first = RandomStreams(5)
        a = first.stream('gnn-train').random(3)
        b = first.stream('vae-train').random(3)
        second = RandomStreams(5)
        self.assertEqual(list(second.stream('vae-train').random(3)), list(b))
        self.assertEqual(list(second.stream('gnn-train').random(3)), list(a))

    def test_indexed_streams_differ(self):
        streams = RandomStreams(0)
        self.assertNotEqual(streams.stream('explain', 0).random(), streams.stream('explain', 1).random())
