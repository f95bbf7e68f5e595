"""
Where each command reads and writes inside a run directory.
"""

from pathlib import Path


class RunLayout:
    """
    File layout of one run directory. Every producing command owns one
    subdirectory and leaves a ``manifest.json`` there.
    """

    TOY = 'toy'
    DATA = 'data'
    GNN = 'gnn'
    VOCAB = 'vocab'
    VAE = 'vae'
    ADAPTER = 'adapter'
    EXPLAIN = 'explain'
    EVALUATE = 'evaluate'
    SWEEP_K = 'sweep_k'
    SWEEP_ITERATIONS = 'sweep_iterations'

    def __init__(self, run_dir):
        self.root = Path(run_dir)

    def __repr__(self):
        return f"RunLayout({str(self.root)!r})"

    def dir(self, name):
        return self.root / name

    @property
    def toy_csv(self):
        return self.dir(self.TOY) / 'toy.csv'

    @property
    def bundle(self):
        return self.dir(self.DATA) / 'bundle.json'

    @property
    def gnn_checkpoint(self):
        return self.dir(self.GNN) / 'model.cfxm'

    @property
    def gnn_log(self):
        return self.dir(self.GNN) / 'train_log.jsonl'

    @property
    def vocab(self):
        return self.dir(self.VOCAB) / 'vocab.json'

    @property
    def vae_checkpoint(self):
        return self.dir(self.VAE) / 'model.cfxm'

    @property
    def vae_log(self):
        return self.dir(self.VAE) / 'train_log.jsonl'

    @property
    def adapter_checkpoint(self):
        return self.dir(self.ADAPTER) / 'model.cfxm'

    @property
    def adapter_log(self):
        return self.dir(self.ADAPTER) / 'train_log.jsonl'

    def pool(self, method):
        return self.method_dir(method) / 'pool.json'

    def report(self, method):
        return self.method_dir(method) / 'report.json'

    def method_dir(self, method):
        if method == 'adapter':
            return self.dir(self.EXPLAIN)
        return self.dir(f'baseline_{method}')
