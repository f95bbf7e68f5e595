import json
import tempfile
from pathlib import Path

from django.test import SimpleTestCase

from chemistry.canonical import canonical_key
from chemistry.smiles import parse_smiles
from core.config import RunConfig
from core.exceptions import CfxError, ConfigError
from explanations.pools import CandidatePool


class CandidatePoolTests(SimpleTestCase):
    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.root = Path(self.tmp.name)
        self.config = RunConfig(run_dir=self.tmp.name, seed=4, delta=0.8)
        self.inputs = [parse_smiles('NCC'), parse_smiles('CCCC')]

    def tearDown(self):
        self.tmp.cleanup()

    def pool(self, method='adapter', config=None):
        return CandidatePool.for_run(method, config or self.config, self.inputs, explain_class=0)

    def test_for_run(self):
        pool = self.pool()
        self.assertEqual(pool.target_class, 1)
        self.assertEqual(pool.inputs, [canonical_key(mol) for mol in self.inputs])
        self.assertEqual(pool.metric_settings(), (0.8, 2, 2048))
        self.assertEqual(pool.config_hash, self.config.config_hash())
        self.assertEqual(pool.seed, 4)

    def test_entries_are_canonical_and_distinct_in_order(self):
        pool = self.pool()
        pool.add(parse_smiles('OCC'), 0, 3)
        pool.add(parse_smiles('CN=O'), 1, 0)
        pool.add(parse_smiles('CCO'), 1, 2)
        self.assertEqual(len(pool), 3)
        self.assertEqual(pool.distinct_smiles(), [canonical_key(parse_smiles('CCO')), canonical_key(parse_smiles('CN=O'))])
        self.assertEqual(pool.molecules()[0], parse_smiles(pool.distinct_smiles()[0]))

    def test_save_and_load(self):
        pool = self.pool('walk')
        pool.add(parse_smiles('CCO'), 1, 5)
        loaded = CandidatePool.load(pool.save(self.root / 'pool.json'))
        self.assertEqual(loaded.to_json(), pool.to_json())
        self.assertEqual(loaded.input_molecules()[0], parse_smiles(pool.inputs[0]))

    def test_load_rejects_malformed_pools(self):
        path = self.root / 'pool.json'
        data = self.pool().to_json()
        data['candidates'] = [{'smiles': 'CCO', 'input_index': -1, 'step': 0}]
        path.write_text(json.dumps(data))
        with self.assertRaises(CfxError) as ctx:
            CandidatePool.load(path)
        self.assertEqual(ctx.exception.code, 'schema')

    def test_compatibility(self):
        self.pool().check_compatible(self.pool('sa', self.config.replace(seed=9)))
        with self.assertRaises(ConfigError) as ctx:
            self.pool().check_compatible(self.pool('sa', self.config.replace(fp_nbits=1024)))
        self.assertEqual(ctx.exception.code, 'incompatible_pools')
