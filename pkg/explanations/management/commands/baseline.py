"""
Produce a candidate pool and report with one of the comparison methods
"""

from core.artifacts import RunLayout
from core.commands import CfxCommand
from core.utils import write_json
from explanations.baselines import BASELINES, run_baseline
from explanations.inference import load_pipeline, pipeline_inputs
from explanations.reports import build_report


class Command(CfxCommand):
    help = 'Run a baseline explainer: sample, sa (simulated annealing) or walk (random edits)'

    def add_arguments(self, parser):
        parser.add_argument('method', choices=BASELINES)
        super().add_arguments(parser)

    def handle(self, *args, **options):
        self.method = options['method']
        return super().handle(*args, **options)

    def output_dir(self, config):
        return RunLayout(config.run_dir).method_dir(self.method)

    def run(self, config, options):
        pipeline = load_pipeline(config, adapter=False)
        layout = pipeline.layout
        self.stdout.write(f'🎲 Running the {self.method} baseline on {len(pipeline.inputs)} inputs...')

        pool = run_baseline(self.method, pipeline, config)
        pool.save(layout.pool(self.method))
        report = build_report(pool, pipeline.scorer, config)
        write_json(layout.report(self.method), report)

        cost = 'n/a' if report['cost'] is None else f"{report['cost']:.4f}"
        self.success(f"✅ {self.method}: coverage@{report['k']} = {report['coverage']:.4f}  cost = {cost}")
        return pipeline_inputs(pipeline), [layout.pool(self.method), layout.report(self.method)]
