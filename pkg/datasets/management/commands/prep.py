"""
Turn a labelled ``smiles,label`` CSV into the split bundle every later step reads.
"""

from core.artifacts import RunLayout
from core.commands import CfxCommand
from core.exceptions import ConfigError
from datasets.bundle import prep


class Command(CfxCommand):
    help = 'Parse, filter, deduplicate and split a labelled molecule CSV'
    subdir = RunLayout.DATA

    def run(self, config, options):
        if not config.dataset:
            raise ConfigError("prep needs --dataset pointing at a smiles,label CSV", code='missing_dataset')
        self.stdout.write('🧪 Preparing dataset...')
        bundle = prep(config.dataset, config)
        path = bundle.save(RunLayout(config.run_dir).bundle)

        provenance = bundle.provenance
        self.stdout.write(f"   Skipped rows: {provenance['skipped_rows']}")
        self.stdout.write(f"   Dropped (invalid / rare elements / duplicates): "
                          f"{provenance['dropped_invalid']} / {provenance['dropped_rare_elements']} / "
                          f"{provenance['duplicates_removed']}")
        sizes = bundle.sizes()
        self.success(f"✅ Bundle written to {path} "
                     f"(train {sizes['train']}, valid {sizes['valid']}, test {sizes['test']})")
        return [config.dataset], [path]
