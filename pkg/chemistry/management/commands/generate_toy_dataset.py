"""
Synthetic rule-labelled molecules so the pipeline can run without downloads
"""

from chemistry.synthetic import LABEL_RULES, generate_toy_dataset
from core.artifacts import RunLayout
from core.commands import CfxCommand


class Command(CfxCommand):
    help = 'Generate a balanced toy dataset of random molecules labelled by a structural rule'
    subdir = RunLayout.TOY

    def add_arguments(self, parser):
        super().add_arguments(parser)
        parser.add_argument(
            '--size',
            type=int,
            default=500,
            help='Number of molecules to generate (default: 500)'
        )
        parser.add_argument(
            '--rule',
            choices=sorted(LABEL_RULES),
            default='n-o-bond',
            help='Labelling rule; label 1 when the rule holds (default: n-o-bond)'
        )
        parser.add_argument(
            '--positive-fraction',
            type=float,
            default=0.5,
            help='Share of label-1 molecules (0.0-1.0, default: 0.5)'
        )

    def run(self, config, options):
        self.stdout.write(
            self.style.SUCCESS('🚀 Starting toy dataset generation...')
        )
        rng = config.streams().stream('toy-dataset')
        frame = generate_toy_dataset(
            rng, size=options['size'], rule=options['rule'], positive_fraction=options['positive_fraction']
        )
        path = RunLayout(config.run_dir).toy_csv
        path.parent.mkdir(parents=True, exist_ok=True)
        frame.to_csv(path, index=False)

        positives = int(frame['label'].sum())
        self.stdout.write(f"   Positive: {positives}  Negative: {len(frame) - positives}")
        self.success(f"✅ Wrote {len(frame)} molecules to {path}")
        return [], [path]
