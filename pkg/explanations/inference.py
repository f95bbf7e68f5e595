"""
Loading the trained pipeline and running the explanation chain over every
explained input.
"""

import logging
from dataclasses import dataclass

from alignment.adapter import AdapterModel
from alignment.chain import GenerativeChain, next_state
from chemistry.fragments import FragmentVocab
from core.artifacts import RunLayout
from core.exceptions import DatasetError
from core.utils import require
from datasets.bundle import DatasetBundle
from generator.vae import VaeModel
from predictors.gnn import GnnModel
from .pools import CandidatePool
from .principles import PrincipleScorer

logger = logging.getLogger(__name__)


@dataclass
class Pipeline:
    """Frozen models and the explained inputs of one run directory"""
    config: object
    layout: RunLayout
    bundle: DatasetBundle
    gnn: GnnModel
    vocab: FragmentVocab
    vae: VaeModel
    adapter: AdapterModel
    inputs: list
    scorer: PrincipleScorer

    @property
    def explain_class(self):
        return self.bundle.explain_class

    @property
    def target_class(self):
        return 1 - self.bundle.explain_class

    def chain(self, adapter=True, action_mode=None):
        return GenerativeChain.from_config(self.vae, self.adapter if adapter else None, self.config, action_mode)

    def new_pool(self, method):
        return CandidatePool.for_run(method, self.config, self.inputs, self.explain_class)


def explained_inputs(bundle, gnn, config):
    """Molecules of ``config.input_split`` the classifier assigns to the bundle's explain class"""
    if config.explain_class != bundle.explain_class:
        logger.warning(f"Bundle explains class {bundle.explain_class}; ignoring explain_class={config.explain_class}")
    items = bundle.split(config.input_split)
    if not items:
        raise DatasetError(f"the {config.input_split} split is empty", code='empty_split')
    molecules = [item.molecule for item in items]
    predicted = gnn.predict(molecules)
    inputs = [mol for mol, cls in zip(molecules, predicted) if cls == bundle.explain_class]
    if not inputs:
        raise DatasetError(
            f"no {config.input_split} molecule is predicted as class {bundle.explain_class}", code='no_inputs'
        )
    logger.info(f"{len(inputs)} of {len(molecules)} {config.input_split} molecules are explained")
    return inputs


def load_pipeline(config, adapter=True):
    """
    Load every artifact the explanation commands need. ``adapter=False``
    skips the adapter checkpoint (baselines).
    """
    layout = RunLayout(config.run_dir)
    bundle = DatasetBundle.load(layout.bundle)
    gnn = GnnModel.load(require(layout.gnn_checkpoint, 'train_gnn'))
    vocab = FragmentVocab.load(layout.vocab)
    vae = VaeModel.load(require(layout.vae_checkpoint, 'train_vae'), vocab)
    adapter_model = AdapterModel.load(require(layout.adapter_checkpoint, 'train_adapter')) if adapter else None
    inputs = explained_inputs(bundle, gnn, config)
    scorer = PrincipleScorer.from_config(inputs, gnn, 1 - bundle.explain_class, config)
    return Pipeline(config, layout, bundle, gnn, vocab, vae, adapter_model, inputs, scorer)


def pipeline_inputs(pipeline):
    """Paths the explanation commands read, for their manifests"""
    layout = pipeline.layout
    paths = [layout.bundle, layout.gnn_checkpoint, layout.vocab, layout.vae_checkpoint]
    if pipeline.adapter is not None:
        paths.append(layout.adapter_checkpoint)
    return paths


def infer(inputs, chain, scorer, length, streams, pool, final_only=False, stream_name='explain'):
    """
    Run the ``length``-step chain from every input and add the valid
    counterfactuals it visits to ``pool``; with ``final_only`` only the state
    the chain ends in is considered. Each input draws from its own stream.
    """
    for index, molecule in enumerate(inputs):
        rng = streams.stream(stream_name, index)
        state = molecule
        for t in range(length):
            step = chain.step(state, rng)
            state = next_state(step)
            if not final_only and step.decoded and scorer.score(step.candidate).counterfactual:
                pool.add(step.candidate, index, t)
        if final_only and state is not molecule and scorer.score(state).counterfactual:
            pool.add(state, index, length - 1)
    logger.info(f"Chain of {length} steps over {len(inputs)} inputs proposed {len(pool)} counterfactuals")
    return pool
