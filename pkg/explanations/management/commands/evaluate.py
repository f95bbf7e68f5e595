"""
Coverage and cost of one or more candidate pools, with mean and spread per method
"""

from pathlib import Path

import pandas as pd

from core.artifacts import RunLayout
from core.commands import CfxCommand
from core.exceptions import ConfigError
from core.utils import require, write_json
from explanations.pools import CandidatePool
from explanations.reports import existing_pools, metrics_at, scorer_for_pool, summarise_metrics
from predictors.gnn import GnnModel


class Command(CfxCommand):
    help = 'Evaluate candidate pools (any method, any seed) at the configured k'
    subdir = RunLayout.EVALUATE

    def add_arguments(self, parser):
        parser.add_argument('--pools', nargs='+', default=None,
                            help='Candidate pool files (default: every pool in the run directory)')
        super().add_arguments(parser)

    def run(self, config, options):
        layout = RunLayout(config.run_dir)
        paths = [Path(p) for p in options.get('pools') or existing_pools(layout)]
        if not paths:
            raise ConfigError("no candidate pools to evaluate; run explain or baseline first", code='no_pools')
        pools = [CandidatePool.load(require(path, 'explain')) for path in paths]
        for pool in pools[1:]:
            pools[0].check_compatible(pool)
        gnn = GnnModel.load(require(layout.gnn_checkpoint, 'train_gnn'))

        config_hash = config.config_hash()
        rows = []
        for path, pool in zip(paths, pools):
            metrics = metrics_at(pool, scorer_for_pool(pool, gnn, config), config.k, config.selection_mode)
            rows.append({'pool': str(path), 'method': pool.method, 'seed': pool.seed, **metrics,
                         'config_hash': config_hash})
            cost = 'n/a' if metrics['cost'] is None else f"{metrics['cost']:.4f}"
            self.stdout.write(f"   {pool.method:<8} seed {pool.seed}: coverage {metrics['coverage']:.4f}  cost {cost}")

        summary = summarise_metrics(rows)
        output = layout.dir(RunLayout.EVALUATE)
        delta, fp_radius, fp_nbits = pools[0].metric_settings()
        write_json(output / 'metrics.json', {
            'config_hash': config_hash, 'k': config.k, 'selection_mode': config.selection_mode,
            'delta': delta, 'fp_radius': fp_radius, 'fp_nbits': fp_nbits,
            'pools': rows, 'summary': summary,
        })
        pd.DataFrame(rows).to_csv(output / 'metrics.csv', index=False)
        for entry in summary:
            self.success(f"✅ {entry['method']}: coverage {entry['coverage_mean']:.4f} ± {entry['coverage_std']:.4f}")
        return [*paths, layout.gnn_checkpoint], [output / 'metrics.json', output / 'metrics.csv']
