"""
Message-passing graph classifier: the property predictor being explained.
"""

import logging

import numpy as np

from chemistry.molecule import BOND_ORDERS, feature_width, featurize
from core.config import GNN_UPDATES
from core.exceptions import CheckpointError, ConfigError, TrainingError
from core.numkit import (
    Adam, ComputationTape, ParameterSet, Tensor, concat, gather, load_checkpoint, log_softmax, mean,
    pick, save_checkpoint, scatter_add, segment_max, softmax, tanh,
)
from .graph_batch import GraphBatch

logger = logging.getLogger(__name__)

NUM_CLASSES = 2
PREDICT_CHUNK = 256


class MessagePassingTrunk:
    """
    Input projection followed by ``layers`` rounds of

        m_v = sum over neighbours w of tanh([h_v, h_w, e_vw] M + b)
        h_v = tanh([h_v, m_v] U + c)          (concat update)
        h_v = h_v + tanh(m_v U + c)           (additive update)

    and max pooling over nodes. Parameters are registered under ``prefix`` in
    the owner's ParameterSet; ``rng=None`` gives all-zero weights.
    """

    def __init__(self, params, prefix, rng, in_dim, hidden, layers, update='concat'):
        if update not in GNN_UPDATES:
            raise ConfigError(f"unknown update rule {update!r}", code='gnn_update')
        self.params = params
        self.prefix = prefix
        self.hidden = hidden
        self.layers = layers
        self.update = update
        zero = rng is None
        params.linear(f"{prefix}.input", rng, in_dim, hidden, zero=zero)
        for layer in range(layers):
            params.linear(f"{prefix}.layer{layer}.message", rng, 2 * hidden + len(BOND_ORDERS), hidden, zero=zero)
            update_in = 2 * hidden if update == 'concat' else hidden
            params.linear(f"{prefix}.layer{layer}.update", rng, update_in, hidden, zero=zero)

    def node_states(self, batch, x=None):
        """``x`` replaces ``batch.x`` when node inputs carry trainable parts"""
        p = self.params
        h = tanh(p.affine(f"{self.prefix}.input", Tensor(batch.x) if x is None else x))
        edges = Tensor(batch.edge_attr)
        for layer in range(self.layers):
            name = f"{self.prefix}.layer{layer}"
            pair = concat([gather(h, batch.receivers), gather(h, batch.senders), edges], axis=1)
            messages = scatter_add(tanh(p.affine(f"{name}.message", pair)), batch.receivers, batch.num_nodes)
            if self.update == 'concat':
                h = tanh(p.affine(f"{name}.update", concat([h, messages], axis=1)))
            else:
                h = h + tanh(p.affine(f"{name}.update", messages))
        return h

    def pool(self, batch):
        """Graph states ``h_G`` (num_graphs x hidden)"""
        return segment_max(self.node_states(batch), batch.graph_index, batch.num_graphs)


class GnnModel:
    """Binary molecule classifier. Frozen after training."""

    kind = 'gnn'

    def __init__(self, elements, hidden=64, layers=3, update='concat', rng=None):
        self.elements = tuple(elements)
        self.hidden = hidden
        self.layers = layers
        self.update = update
        self.params = ParameterSet()
        self.trunk = MessagePassingTrunk(
            self.params, 'trunk', rng, feature_width(self.elements), hidden, layers, update
        )
        self.params.linear('head', rng, hidden, NUM_CLASSES, zero=rng is None)

    @classmethod
    def from_config(cls, config, rng=None):
        return cls(config.elements, config.gnn_hidden, config.gnn_layers, config.gnn_update, rng)

    def logits(self, batch):
        return self.params.affine('head', self.trunk.pool(batch))

    def forward(self, mol):
        """Class probabilities ``(p0, p1)`` for one molecule"""
        return self.predict_proba([mol])[0]

    def predict_proba(self, molecules):
        molecules = list(molecules)
        out = np.zeros((len(molecules), NUM_CLASSES))
        for start in range(0, len(molecules), PREDICT_CHUNK):
            chunk = molecules[start:start + PREDICT_CHUNK]
            batch = GraphBatch.from_molecules(chunk, self.elements)
            out[start:start + len(chunk)] = softmax(self.logits(batch)).data
        return out

    def predict_prob(self, mol, target_class):
        return float(self.forward(mol)[target_class])

    def predict(self, molecules):
        return self.predict_proba(molecules).argmax(axis=1)

    def metadata(self):
        return {
            'kind': self.kind,
            'elements': list(self.elements),
            'hidden': self.hidden,
            'layers': self.layers,
            'update': self.update,
        }

    def save(self, path, **extra):
        save_checkpoint(path, self.params.state_dict(), {**self.metadata(), **extra})
        return path

    @classmethod
    def load(cls, path):
        tensors, meta = load_checkpoint(path)
        if meta.get('kind') != cls.kind:
            raise CheckpointError(f"{path} holds a {meta.get('kind')!r} checkpoint, expected gnn", code='kind')
        model = cls(meta['elements'], meta['hidden'], meta['layers'], meta['update'])
        model.params.load_state_dict(tensors)
        model.params.freeze()
        return model


def cross_entropy(logits, labels):
    rows = np.arange(len(labels))
    return -mean(pick(log_softmax(logits), rows, labels))


def accuracy(model, items):
    if not items:
        return 0.0
    predicted = model.predict([item.molecule for item in items])
    return float(np.mean(predicted == np.array([item.label for item in items])))


def train_classifier(train, valid, config, rng, log=None):
    """
    Minibatch Adam on cross-entropy. Keeps the parameters of the epoch with the
    best validation accuracy (earliest on ties) and returns the frozen model
    and the per-epoch history.
    """
    if not train:
        raise TrainingError("classifier training split is empty", code='empty_split')
    if not valid:
        raise TrainingError("classifier validation split is empty", code='empty_split')

    model = GnnModel.from_config(config, rng)
    optimizer = Adam(model.params, config.gnn_lr)
    features = [featurize(item.molecule, model.elements) for item in train]
    labels = np.array([item.label for item in train], dtype=np.int64)

    best_accuracy, best_state, best_epoch = -1.0, None, 0
    history = []
    for epoch in range(1, config.gnn_epochs + 1):
        order = rng.permutation(len(train))
        total_loss, correct = 0.0, 0
        for start in range(0, len(order), config.gnn_batch_size):
            index = order[start:start + config.gnn_batch_size]
            batch = GraphBatch.from_features(features[i] for i in index)
            model.params.zero_grad()
            with ComputationTape() as tape:
                logits = model.logits(batch)
                loss = cross_entropy(logits, labels[index])
                tape.backward(loss)
            optimizer.step()
            total_loss += loss.item() * len(index)
            correct += int((logits.data.argmax(axis=1) == labels[index]).sum())

        valid_accuracy = accuracy(model, valid)
        entry = {
            'epoch': epoch,
            'loss': total_loss / len(train),
            'train_accuracy': correct / len(train),
            'valid_accuracy': valid_accuracy,
        }
        history.append(entry)
        if log is not None:
            log.write(entry)
        if valid_accuracy > best_accuracy:
            best_accuracy, best_epoch = valid_accuracy, epoch
            best_state = model.params.state_dict()
        if epoch % 50 == 0 or epoch == 1:
            logger.info(f"GNN epoch {epoch}: loss {entry['loss']:.4f} "
                        f"train acc {entry['train_accuracy']:.3f} valid acc {valid_accuracy:.3f}")

    model.params.load_state_dict(best_state)
    model.params.freeze()
    logger.info(f"Kept GNN parameters from epoch {best_epoch} (valid accuracy {best_accuracy:.3f})")
    return model, history

