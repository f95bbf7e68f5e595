"""
Coverage and cost at the configured k as the number of chain iterations grows
"""

import pandas as pd

from core.artifacts import RunLayout
from core.commands import CfxCommand
from explanations.baselines import BASELINES, run_baseline
from explanations.inference import infer, load_pipeline, pipeline_inputs
from explanations.reports import metrics_at


class Command(CfxCommand):
    help = 'Rerun every method for each value in sweep_iteration_values and write the curves as CSV'
    subdir = RunLayout.SWEEP_ITERATIONS

    def run(self, config, options):
        pipeline = load_pipeline(config)
        scorer = pipeline.scorer
        config_hash = config.config_hash()
        rows = []
        for iterations in config.sweep_iteration_values:
            self.stdout.write(f'🔁 {iterations} iterations per input...')
            pools = {'adapter': infer(pipeline.inputs, pipeline.chain(), scorer, iterations, config.streams(),
                                      pipeline.new_pool('adapter'), final_only=config.final_only)}
            for method in BASELINES:
                pools[method] = run_baseline(method, pipeline, config, length=iterations,
                                             walk_steps=iterations * len(pipeline.inputs))
            for method, pool in pools.items():
                rows.append({
                    'method': method, 'iterations': iterations, 'pool_size': len(pool.distinct_smiles()),
                    **metrics_at(pool, scorer, config.k, config.selection_mode), 'config_hash': config_hash,
                })

        output = pipeline.layout.dir(RunLayout.SWEEP_ITERATIONS) / 'sweep_iterations.csv'
        columns = ['method', 'iterations', 'pool_size', 'k', 'selected', 'coverage', 'cost', 'config_hash']
        pd.DataFrame(rows, columns=columns).to_csv(output, index=False)
        self.success(f"✅ {len(rows)} rows written to {output}")
        return pipeline_inputs(pipeline), [output]
