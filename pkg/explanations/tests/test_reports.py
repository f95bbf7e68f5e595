import tempfile

import jsonschema
import numpy as np
from django.test import SimpleTestCase

from chemistry.smiles import parse_smiles
from core.artifacts import RunLayout
from core.config import RunConfig
from explanations.pools import CandidatePool
from explanations.principles import PrincipleScorer
from explanations.reports import (
    REPORT_SCHEMA, build_report, eligible_candidates, existing_pools, metrics_at, scorer_for_pool, set_metrics,
    summarise_metrics,
)
from .fakes import OxygenClassifier

INPUTS = ('CCN', 'CCCC', 'NCCN', 'CC')
CANDIDATES = ('CCO', 'OCC', 'CCC', 'NCCO', 'OCCCC', 'CNC')


class ReportTests(SimpleTestCase):
    def setUp(self):
        self.config = RunConfig(k=2, delta=0.9, closest_inputs=2)
        self.inputs = [parse_smiles(s) for s in INPUTS]
        self.pool = CandidatePool.for_run('adapter', self.config, self.inputs, explain_class=0)
        for step, smiles in enumerate(CANDIDATES):
            self.pool.add(parse_smiles(smiles), step % len(INPUTS), step)
        self.scorer = scorer_for_pool(self.pool, OxygenClassifier(), self.config)

    def test_only_valid_counterfactuals_are_eligible(self):
        eligible = eligible_candidates(self.pool, self.scorer)
        self.assertEqual(len(eligible), 3)
        self.assertTrue(all(s.valid and s.counterfactual for s in eligible))

    def test_report_layout(self):
        report = build_report(self.pool, self.scorer, self.config)
        jsonschema.validate(report, REPORT_SCHEMA)
        self.assertEqual(report['k'], 2)
        self.assertEqual(len(report['candidates']), 2)
        self.assertEqual(report['pool_size'], 5)
        self.assertEqual(report['target_class'], 1)
        for entry in report['candidates']:
            self.assertEqual(len(entry['closest_inputs']), 2)
            self.assertTrue(entry['counterfactual'])
        members = [parse_smiles(entry['smiles']) for entry in report['candidates']]
        coverage, cost = set_metrics(members, self.scorer)
        self.assertEqual(report['coverage'], coverage)
        self.assertEqual(report['cost'], cost)

    def test_modular_report(self):
        report = build_report(self.pool, self.scorer, self.config.replace(selection_mode='modular'), k=3)
        scores = [entry['score'] for entry in report['candidates']]
        self.assertEqual(scores, sorted(scores, reverse=True))

    def test_empty_report(self):
        empty = CandidatePool.for_run('walk', self.config, self.inputs, explain_class=0)
        with self.assertLogs('explanations.reports', level='WARNING'):
            report = build_report(empty, self.scorer, self.config)
        jsonschema.validate(report, REPORT_SCHEMA)
        self.assertEqual(report['coverage'], 0.0)
        self.assertIsNone(report['cost'])

    def test_metrics_at(self):
        metrics = metrics_at(self.pool, self.scorer, 1, 'set-coverage')
        self.assertEqual(metrics['k'], 1)
        self.assertEqual(metrics['selected'], 1)
        self.assertGreaterEqual(metrics['coverage'], 0.0)

    def test_scorer_follows_the_pool_settings(self):
        scorer = scorer_for_pool(self.pool, OxygenClassifier(), self.config.replace(delta=0.1))
        self.assertEqual(scorer.delta, 0.9)
        self.assertEqual(scorer.num_inputs, len(INPUTS))
        self.assertIsInstance(scorer, PrincipleScorer)

    def test_existing_pools_lists_adapter_first(self):
        with tempfile.TemporaryDirectory() as tmp:
            layout = RunLayout(tmp)
            self.pool.save(layout.pool('walk'))
            self.pool.save(layout.pool('adapter'))
            self.assertEqual(existing_pools(layout), [layout.pool('adapter'), layout.pool('walk')])


class SummaryTests(SimpleTestCase):
    def test_mean_and_spread_per_method(self):
        rows = [
            {'method': 'sa', 'coverage': 0.5, 'cost': 0.2},
            {'method': 'sa', 'coverage': 0.7, 'cost': None},
            {'method': 'adapter', 'coverage': 0.1, 'cost': None},
        ]
        summary = {entry['method']: entry for entry in summarise_metrics(rows)}
        self.assertEqual(list(summary), ['adapter', 'sa'])
        self.assertAlmostEqual(summary['sa']['coverage_mean'], 0.6)
        self.assertAlmostEqual(summary['sa']['coverage_std'], 0.1)
        self.assertAlmostEqual(summary['sa']['cost_mean'], 0.2)
        self.assertEqual(summary['sa']['pools'], 2)
        self.assertIsNone(summary['adapter']['cost_mean'])
        self.assertTrue(np.isclose(summary['adapter']['coverage_std'], 0.0))
