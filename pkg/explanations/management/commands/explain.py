"""
Run the aligned chain over the explained inputs and select the global explanations
"""

from core.artifacts import RunLayout
from core.commands import CfxCommand
from core.utils import write_json
from explanations.inference import infer, load_pipeline, pipeline_inputs
from explanations.reports import build_report


class Command(CfxCommand):
    help = 'Generate counterfactual candidates with the adapter and report the top-k explanations'
    subdir = RunLayout.EXPLAIN

    def run(self, config, options):
        pipeline = load_pipeline(config)
        layout = pipeline.layout
        self.stdout.write(f'🔎 Explaining {len(pipeline.inputs)} inputs with {config.t_infer} chain steps each...')

        pool = infer(pipeline.inputs, pipeline.chain(), pipeline.scorer, config.t_infer, config.streams(),
                     pipeline.new_pool('adapter'), final_only=config.final_only)
        pool.save(layout.pool('adapter'))
        report = build_report(pool, pipeline.scorer, config)
        write_json(layout.report('adapter'), report)

        self.stdout.write(f"   Distinct counterfactuals: {report['pool_size']}  Selected: {len(report['candidates'])}")
        cost = 'n/a' if report['cost'] is None else f"{report['cost']:.4f}"
        self.success(f"✅ coverage@{report['k']} = {report['coverage']:.4f}  cost = {cost}")
        return pipeline_inputs(pipeline), [layout.pool('adapter'), layout.report('adapter')]
