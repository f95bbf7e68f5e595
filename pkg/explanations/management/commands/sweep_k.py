"""
Coverage and cost as the explanation budget k grows, for every pool in the run
"""

import pandas as pd

from core.artifacts import RunLayout
from core.commands import CfxCommand
from core.exceptions import ConfigError
from core.utils import require
from explanations.pools import CandidatePool
from explanations.reports import existing_pools, metrics_at, scorer_for_pool
from predictors.gnn import GnnModel


class Command(CfxCommand):
    help = 'Sweep k over sweep_k_values and write coverage/cost curves as CSV'
    subdir = RunLayout.SWEEP_K

    def run(self, config, options):
        layout = RunLayout(config.run_dir)
        paths = existing_pools(layout)
        if not paths:
            raise ConfigError("no candidate pools found; run explain or baseline first", code='no_pools')
        gnn = GnnModel.load(require(layout.gnn_checkpoint, 'train_gnn'))

        config_hash = config.config_hash()
        rows = []
        for path in paths:
            pool = CandidatePool.load(path)
            scorer = scorer_for_pool(pool, gnn, config)
            self.stdout.write(f'📈 {pool.method}: {len(pool.distinct_smiles())} distinct candidates')
            for k in config.sweep_k_values:
                rows.append({'method': pool.method, **metrics_at(pool, scorer, k, config.selection_mode),
                             'config_hash': config_hash})

        output = layout.dir(RunLayout.SWEEP_K) / 'sweep_k.csv'
        columns = ['method', 'k', 'selected', 'coverage', 'cost', 'config_hash']
        pd.DataFrame(rows, columns=columns).to_csv(output, index=False)
        self.success(f"✅ {len(rows)} rows written to {output}")
        return [*paths, layout.gnn_checkpoint], [output]
