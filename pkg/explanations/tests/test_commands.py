import json
import tempfile
from io import StringIO
from pathlib import Path

import jsonschema
import pandas as pd
from django.core.management import call_command
from django.core.management.base import CommandError
from django.test import TestCase

from core.artifacts import RunLayout
from core.exceptions import EXIT_CONFIG_ERROR, EXIT_MISSING_PREREQUISITE
from core.models import RunRecord
from explanations.pools import CandidatePool
from explanations.reports import REPORT_SCHEMA

SMALL_RUN = """
min_atom_count=1
input_split=train
gnn_hidden=8
gnn_layers=2
gnn_epochs=60
gnn_lr=0.01
vocab_size=20
latent_dim=4
vae_hidden=8
vae_epochs=2
n_max_fragments=6
max_decode_atoms=20
beam=2
adapter_hidden=4
adapter_updates=1
episodes_per_update=1
t_train=1
n_samples=1
ppo_epochs=1
t_infer=2
walk_iterations=2
k=3
sweep_k_values=1,3
sweep_iteration_values=1
"""


class PipelineCommandTests(TestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.run_dir = self.tmp.name
        self.layout = RunLayout(self.run_dir)
        self.config_file = Path(self.run_dir) / 'small.env'
        self.config_file.write_text(SMALL_RUN)

    def tearDown(self):
        self.tmp.cleanup()

    def call(self, name, *args, **options):
        return call_command(name, *args, config_file=str(self.config_file), run_dir=self.run_dir,
                            stdout=StringIO(), **options)

    def prepare(self):
        self.call('generate_toy_dataset', size=60, rule='contains-o')
        self.call('prep', dataset=str(self.layout.toy_csv))
        self.call('mine_vocab')
        self.call('train_gnn')
        self.call('train_vae')

    def test_full_pipeline(self):
        self.prepare()
        self.call('train_adapter')
        self.call('explain')
        self.call('baseline', 'walk')
        self.call('evaluate')
        self.call('sweep_k')
        self.call('sweep_iterations')

        for path in (self.layout.gnn_checkpoint, self.layout.vae_checkpoint, self.layout.adapter_checkpoint):
            self.assertTrue(path.is_file())
        report = json.loads(self.layout.report('adapter').read_text())
        jsonschema.validate(report, REPORT_SCHEMA)
        self.assertEqual(report['k'], 3)
        self.assertLessEqual(len(report['candidates']), 3)

        pool = CandidatePool.load(self.layout.pool('walk'))
        self.assertEqual(pool.method, 'walk')
        self.assertEqual(pool.delta, 0.87)

        metrics = json.loads((self.layout.dir(RunLayout.EVALUATE) / 'metrics.json').read_text())
        self.assertEqual([entry['method'] for entry in metrics['summary']], ['adapter', 'walk'])
        sweep = pd.read_csv(self.layout.dir(RunLayout.SWEEP_K) / 'sweep_k.csv')
        self.assertEqual(len(sweep), 4)
        self.assertEqual(sorted(sweep['k'].unique()), [1, 3])

        records = RunRecord.objects.all()
        self.assertEqual(records.count(), 11)
        self.assertTrue(all(record.status == 'COMPLETED' for record in records))

        config_hash = records.get(command='explain').config_hash
        self.assertEqual(report['config_hash'], config_hash)
        self.assertEqual(json.loads(self.layout.bundle.read_text())['config_hash'], config_hash)
        self.assertEqual(metrics['config_hash'], config_hash)
        csv_files = (
            self.layout.dir(RunLayout.EVALUATE) / 'metrics.csv',
            self.layout.dir(RunLayout.SWEEP_K) / 'sweep_k.csv',
            self.layout.dir(RunLayout.SWEEP_ITERATIONS) / 'sweep_iterations.csv',
        )
        for path in csv_files:
            frame = pd.read_csv(path, dtype={'config_hash': str})
            self.assertEqual(set(frame['config_hash']), {config_hash}, path.name)
        iterations = pd.read_csv(csv_files[2])
        self.assertEqual(sorted(iterations['method']), ['adapter', 'sa', 'sample', 'walk'])

    def test_untrained_ablations(self):
        self.call('generate_toy_dataset', size=60, rule='contains-o')
        self.call('prep', dataset=str(self.layout.toy_csv))
        self.call('mine_vocab')
        self.call('train_gnn')
        self.call('train_vae', no_pretrain='true')
        self.call('train_adapter', no_adapter_training='true')
        self.assertFalse(self.layout.vae_log.exists())
        self.assertFalse(self.layout.adapter_log.exists())
        self.call('explain')
        self.assertTrue(self.layout.report('adapter').is_file())

    def test_explain_needs_an_adapter(self):
        self.prepare()
        with self.assertRaises(CommandError) as ctx:
            self.call('explain')
        self.assertEqual(ctx.exception.returncode, EXIT_MISSING_PREREQUISITE)
        self.assertIn('train_adapter', str(ctx.exception))

    def test_evaluate_without_pools(self):
        self.prepare()
        with self.assertRaises(CommandError) as ctx:
            self.call('evaluate')
        self.assertEqual(ctx.exception.returncode, EXIT_CONFIG_ERROR)
