"""
Pre-train (or, for the ablation, just initialise) the fragment VAE
"""

from chemistry.fragments import FragmentVocab
from core.artifacts import RunLayout
from core.commands import CfxCommand
from core.utils import JsonLinesWriter
from datasets.bundle import DatasetBundle
from generator.training import evaluate, prepare_corpus, train_vae, untrained_vae


class Command(CfxCommand):
    help = 'Train and freeze the fragment-based molecule generator'
    subdir = RunLayout.VAE

    def run(self, config, options):
        layout = RunLayout(config.run_dir)
        bundle = DatasetBundle.load(layout.bundle)
        vocab = FragmentVocab.load(layout.vocab)
        rng = config.streams().stream('vae-train')
        molecules = [item.molecule for item in bundle.train]

        if config.no_pretrain:
            self.stdout.write(self.style.WARNING('⚠️  --no-pretrain: writing a randomly initialised generator'))
            model = untrained_vae(vocab, config, rng)
            outputs = [layout.vae_checkpoint]
        else:
            self.stdout.write(f'🧬 Training generator for {config.vae_epochs} epochs on {len(molecules)} molecules...')
            with JsonLinesWriter(layout.vae_log) as log:
                model, history = train_vae(molecules, vocab, config, rng, log=log)
            best = min(history, key=lambda entry: entry['loss'])
            self.stdout.write(f"   Best loss {best['loss']:.3f} at epoch {best['epoch']}")
            outputs = [layout.vae_checkpoint, layout.vae_log]

        valid = prepare_corpus([item.molecule for item in bundle.valid], vocab, config)
        if valid:
            metrics = evaluate(model, valid)
            self.stdout.write(f"   Valid fragment accuracy {metrics['fragment_accuracy']:.3f}  "
                              f"edge accuracy {metrics['edge_accuracy']:.3f}")
        model.save(layout.vae_checkpoint, config_hash=config.config_hash(), pretrained=not config.no_pretrain)
        self.success(f"✅ Generator written to {layout.vae_checkpoint}")
        return [layout.bundle, layout.vocab], outputs
