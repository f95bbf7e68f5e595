"""
Align the latent-shift adapter to the explanation principles with PPO
"""

from alignment.chain import GenerativeChain
from alignment.ppo import build_adapter, train_adapter
from core.artifacts import RunLayout
from core.commands import CfxCommand
from core.utils import JsonLinesWriter
from explanations.inference import load_pipeline, pipeline_inputs


class Command(CfxCommand):
    help = 'Train the adapter policy and critic against the frozen classifier and generator'
    subdir = RunLayout.ADAPTER

    def run(self, config, options):
        pipeline = load_pipeline(config, adapter=False)
        layout = pipeline.layout
        rng = config.streams().stream('adapter-train')
        adapter = build_adapter(pipeline.vae, config, rng)
        inputs = pipeline_inputs(pipeline)

        if config.no_adapter_training:
            self.stdout.write(self.style.WARNING(
                f'⚠️  --no-adapter-training: writing an untrained ({adapter.init}-init) adapter'))
            adapter.params.freeze()
            adapter.save(layout.adapter_checkpoint, config_hash=config.config_hash(), trained=False)
            self.success(f"✅ Adapter written to {layout.adapter_checkpoint}")
            return inputs, [layout.adapter_checkpoint]

        chain = GenerativeChain.from_config(pipeline.vae, adapter, config)
        self.stdout.write(f'🎯 Aligning adapter for {config.adapter_updates} updates on '
                          f'{len(pipeline.inputs)} inputs (target class {pipeline.target_class})...')
        with JsonLinesWriter(layout.adapter_log) as log:
            adapter, history = train_adapter(pipeline.inputs, chain, pipeline.scorer, config, rng, log=log)

        first, best = history[0]['mean_reward'], max(entry['mean_reward'] for entry in history)
        self.stdout.write(f"   Mean episode reward: first {first:.4f}  best {best:.4f}")
        aborted = sum(1 for entry in history if entry['aborted'])
        if aborted:
            self.stdout.write(self.style.WARNING(f"   {aborted} updates reverted by the KL guardrail"))
        adapter.save(layout.adapter_checkpoint, config_hash=config.config_hash(), trained=True)
        self.success(f"✅ Adapter written to {layout.adapter_checkpoint}")
        return inputs, [layout.adapter_checkpoint, layout.adapter_log]
