"""
Pre-training of the fragment VAE on the local corpus.
"""

import logging

import numpy as np

from core.exceptions import ChemistryError, TrainingError, VocabularyError
from core.numkit import Adam, ComputationTape
from .vae import VaeModel, prepare_example

logger = logging.getLogger(__name__)

MAX_GRAD_NORM = 5.0


def prepare_corpus(molecules, vocab, config):
    """
    Teacher-forcing examples for every molecule that decomposes into at most
    ``n_max_fragments`` fragments and ``max_decode_atoms`` atoms.
    """
    examples, skipped = [], 0
    for mol in molecules:
        if mol.num_atoms > config.max_decode_atoms:
            skipped += 1
            continue
        try:
            example = prepare_example(mol, vocab, config.elements)
        except (ChemistryError, VocabularyError) as e:
            logger.warning(f"Skipping molecule that cannot be decomposed: {e.message}")
            skipped += 1
            continue
        if example.num_fragments > config.n_max_fragments:
            skipped += 1
            continue
        examples.append(example)
    if skipped:
        logger.info(f"{skipped} molecules exceed the decoder limits or vocabulary and are left out")
    return examples


def evaluate(model, examples, rng=None, batch_size=64):
    """
    Loss and teacher-forced accuracies over ``examples``; the latent is the
    encoder mean unless ``rng`` supplies noise.
    """
    totals = {'loss': 0.0, 'fragment_correct': 0, 'fragment_total': 0, 'edge_correct': 0, 'edge_total': 0}
    for start in range(0, len(examples), batch_size):
        chunk = examples[start:start + batch_size]
        eps = np.zeros((len(chunk), model.latent_dim)) if rng is None else rng.standard_normal(
            (len(chunk), model.latent_dim))
        loss, stats = model.batch_elbo(chunk, eps)
        totals['loss'] += loss.item() * len(chunk)
        for key in ('fragment_correct', 'fragment_total', 'edge_correct', 'edge_total'):
            totals[key] += stats[key]
    return {
        'loss': totals['loss'] / max(len(examples), 1),
        'fragment_accuracy': totals['fragment_correct'] / max(totals['fragment_total'], 1),
        'edge_accuracy': totals['edge_correct'] / max(totals['edge_total'], 1),
    }


def train_vae(molecules, vocab, config, rng, log=None):
    """
    Adam on the negative ELBO. The parameters of the epoch with the lowest
    training loss are kept and frozen.

    Returns ``(model, history)``.
    """
    examples = prepare_corpus(molecules, vocab, config)
    if not examples:
        raise TrainingError("no usable molecules to train the generator on", code='empty_corpus')

    model = VaeModel.from_config(vocab, config, rng)
    optimizer = Adam(model.params, config.vae_lr, max_grad_norm=MAX_GRAD_NORM)
    best_loss, best_state, best_epoch = np.inf, None, 0
    history = []

    for epoch in range(1, config.vae_epochs + 1):
        order = rng.permutation(len(examples))
        total = {'loss': 0.0, 'kl': 0.0, 'fragment_correct': 0, 'fragment_total': 0}
        for start in range(0, len(order), config.vae_batch_size):
            chunk = [examples[i] for i in order[start:start + config.vae_batch_size]]
            eps = rng.standard_normal((len(chunk), model.latent_dim))
            model.params.zero_grad()
            with ComputationTape() as tape:
                loss, stats = model.batch_elbo(chunk, eps)
                tape.backward(loss)
            optimizer.step()
            total['loss'] += loss.item() * len(chunk)
            total['kl'] += stats['kl'] * len(chunk)
            total['fragment_correct'] += stats['fragment_correct']
            total['fragment_total'] += stats['fragment_total']

        entry = {
            'epoch': epoch,
            'loss': total['loss'] / len(examples),
            'kl': total['kl'] / len(examples),
            'fragment_accuracy': total['fragment_correct'] / max(total['fragment_total'], 1),
        }
        if not np.isfinite(entry['loss']):
            raise TrainingError(f"generator loss became non-finite at epoch {epoch}", code='non_finite')
        history.append(entry)
        if log is not None:
            log.write(entry)
        if entry['loss'] < best_loss:
            best_loss, best_epoch = entry['loss'], epoch
            best_state = model.params.state_dict()
        logger.info(f"VAE epoch {epoch}: loss {entry['loss']:.3f} kl {entry['kl']:.3f} "
                    f"fragment acc {entry['fragment_accuracy']:.3f}")

    model.params.load_state_dict(best_state)
    model.params.freeze()
    logger.info(f"Kept generator parameters from epoch {best_epoch} (loss {best_loss:.3f})")
    return model, history


def untrained_vae(vocab, config, rng):
    """Randomly initialised, frozen generator for the no-pretraining ablation"""
    model = VaeModel.from_config(vocab, config, rng)
    model.params.freeze()
    return model
