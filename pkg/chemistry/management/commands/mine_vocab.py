"""
Mine the fragment vocabulary from the training split
"""

from chemistry.fragments import mine_vocab
from core.artifacts import RunLayout
from core.commands import CfxCommand
from datasets.bundle import DatasetBundle


class Command(CfxCommand):
    help = 'Mine principal-subgraph fragments from the training molecules'
    subdir = RunLayout.VOCAB

    def run(self, config, options):
        layout = RunLayout(config.run_dir)
        bundle = DatasetBundle.load(layout.bundle)
        molecules = [item.molecule for item in bundle.train]
        self.stdout.write(f'⛏️  Mining up to {config.vocab_size} fragments from {len(molecules)} molecules...')

        vocab = mine_vocab(molecules, config.vocab_size, config.max_fragment_atoms)
        path = vocab.save(layout.vocab)

        largest = max(entry.size for entry in vocab)
        self.stdout.write(f"   Entries: {len(vocab)}  Largest fragment: {largest} atoms")
        self.success(f"✅ Vocabulary written to {path}")
        return [layout.bundle], [path]
