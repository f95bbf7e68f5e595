"""
Train the classifier that the explanations are produced for
"""

from core.artifacts import RunLayout
from core.commands import CfxCommand
from core.utils import JsonLinesWriter
from datasets.bundle import DatasetBundle
from predictors.gnn import accuracy, train_classifier


class Command(CfxCommand):
    help = 'Train and freeze the message-passing molecule classifier'
    subdir = RunLayout.GNN

    def run(self, config, options):
        layout = RunLayout(config.run_dir)
        bundle = DatasetBundle.load(layout.bundle)
        self.stdout.write(f'🧠 Training classifier for {config.gnn_epochs} epochs '
                          f'on {len(bundle.train)} molecules...')

        rng = config.streams().stream('gnn-train')
        with JsonLinesWriter(layout.gnn_log) as log:
            model, history = train_classifier(bundle.train, bundle.valid, config, rng, log=log)

        test_accuracy = accuracy(model, bundle.test)
        best = max(entry['valid_accuracy'] for entry in history)
        model.save(layout.gnn_checkpoint, config_hash=config.config_hash(), test_accuracy=test_accuracy)

        self.stdout.write(f"   Best valid accuracy: {best:.3f}  Test accuracy: {test_accuracy:.3f}")
        self.success(f"✅ Classifier written to {layout.gnn_checkpoint}")
        return [layout.bundle], [layout.gnn_checkpoint, layout.gnn_log]
