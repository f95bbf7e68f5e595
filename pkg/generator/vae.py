"""
Fragment-based variational autoencoder over molecules.

The encoder is a message-passing trunk with Gaussian heads. The decoder emits
a sequence of vocabulary fragments (then STOP) from a recurrent state
conditioned on z, and an edge predictor scores every cross-fragment atom pair
as no bond or a bond of order 1-3.
"""

import hashlib
import logging
from dataclasses import dataclass

import numpy as np

from chemistry.fragments import decompose
from chemistry.molecule import BOND_ORDERS, feature_width, featurize
from core.exceptions import CheckpointError, ShapeError
from core.numkit import (
    ParameterSet, Tensor, concat, exp, gather, glorot, load_checkpoint, log_softmax, pick,
    save_checkpoint, tanh, tsum,
)
from predictors.gnn import MessagePassingTrunk
from predictors.graph_batch import GraphBatch

logger = logging.getLogger(__name__)

NO_BOND = 0
EDGE_CLASSES = (NO_BOND,) + BOND_ORDERS
MASKED = -1e9


@dataclass(frozen=True)
class LatentGaussian:
    """Diagonal Gaussian ``N(mu, exp(log_sigma)^2)``"""
    mu: np.ndarray
    log_sigma: np.ndarray

    @property
    def dim(self):
        return self.mu.shape[-1]

    @property
    def sigma(self):
        return np.exp(self.log_sigma)


def sample_latent(gaussian, rng):
    """Reparameterized draw ``mu + sigma * eps``"""
    eps = rng.standard_normal(gaussian.mu.shape)
    return gaussian.mu + np.exp(gaussian.log_sigma) * eps


def vocab_digest(vocab):
    return hashlib.sha256('\n'.join(entry.smiles for entry in vocab).encode('utf-8')).hexdigest()[:16]


def _table(rng, shape, scale=0.1):
    return np.zeros(shape) if rng is None else rng.normal(0.0, scale, size=shape)


def _matrix(rng, fan_in, fan_out):
    return np.zeros((fan_in, fan_out)) if rng is None else glorot(rng, fan_in, fan_out)


@dataclass(frozen=True)
class VaeExample:
    """
    Teacher-forcing targets for one molecule. Union atoms are laid out
    fragment by fragment in pattern order; ``pairs`` are every cross-fragment
    atom pair of the union with its bond label.
    """
    features: object
    tokens: tuple
    union: object
    node_tokens: np.ndarray
    pairs: np.ndarray
    pair_labels: np.ndarray

    @property
    def num_fragments(self):
        return len(self.tokens) - 1


def cross_pairs(owner):
    owner = np.asarray(owner)
    u, v = np.triu_indices(len(owner), k=1)
    keep = owner[u] != owner[v]
    return np.stack([u[keep], v[keep]], axis=1).astype(np.int64)


def prepare_example(mol, vocab, elements):
    decomposition = decompose(mol, vocab)
    fragment_ids = decomposition.fragment_ids
    union, owner = vocab.union(fragment_ids)

    position = {}
    offset = 0
    for vocab_id, placed in decomposition.fragments:
        for k, atom in enumerate(placed):
            position[atom] = offset + k
        offset += len(placed)

    pairs = cross_pairs(owner)
    labels = np.zeros(len(pairs), dtype=np.int64)
    index = {(int(u), int(v)): row for row, (u, v) in enumerate(pairs)}
    for i, j, order in decomposition.inter_bonds:
        a, b = sorted((position[i], position[j]))
        labels[index[(a, b)]] = EDGE_CLASSES.index(order)

    return VaeExample(
        features=featurize(mol, elements),
        tokens=tuple(fragment_ids) + (vocab.stop_id,),
        union=featurize(union, elements),
        node_tokens=np.asarray([fragment_ids[p] for p in owner], dtype=np.int64),
        pairs=pairs,
        pair_labels=labels,
    )


class VaeModel:
    kind = 'vae'

    def __init__(self, vocab, elements, latent_dim=56, hidden=128, layers=3, update='concat',
                 n_max=10, max_atoms=40, rng=None):
        self.vocab = vocab
        self.elements = tuple(elements)
        self.latent_dim = latent_dim
        self.hidden = hidden
        self.layers = layers
        self.update = update
        self.n_max = n_max
        self.max_atoms = max_atoms
        self.stop_id = vocab.stop_id
        self.bos_id = vocab.stop_id + 1
        self.token_sizes = np.array([entry.size for entry in vocab] + [0], dtype=np.int64)

        width = feature_width(self.elements)
        zero = rng is None
        p = self.params = ParameterSet()
        self.encoder = MessagePassingTrunk(p, 'encoder', rng, width, hidden, layers, update)
        p.linear('encoder.mu', rng, hidden, latent_dim, zero=zero)
        p.linear('encoder.log_sigma', rng, hidden, latent_dim, zero=zero)

        p.add('decoder.embedding', _table(rng, (vocab.num_tokens + 1, hidden)))
        p.linear('decoder.init', rng, latent_dim, hidden, zero=zero)
        p.linear('decoder.recur', rng, hidden, hidden, zero=zero)
        p.add('decoder.token_in', _matrix(rng, hidden, hidden))
        p.add('decoder.latent_in', _matrix(rng, latent_dim, hidden))
        p.linear('decoder.out', rng, hidden, vocab.num_tokens, zero=zero)

        self.edge_trunk = MessagePassingTrunk(p, 'edge', rng, width + hidden, hidden, 1, 'concat')
        p.linear('edge.hidden', rng, 2 * hidden + latent_dim, hidden, zero=zero)
        p.linear('edge.out', rng, hidden, len(EDGE_CLASSES), zero=zero)

    @classmethod
    def from_config(cls, vocab, config, rng=None):
        return cls(vocab, config.elements, config.latent_dim, config.vae_hidden, config.gnn_layers,
                   config.gnn_update, config.n_max_fragments, config.max_decode_atoms, rng)

    # encoder

    def encode_tensors(self, batch):
        """``(mu, log_sigma, h_G)`` as tensors for a GraphBatch"""
        h_graph = self.encoder.pool(batch)
        mu = self.params.affine('encoder.mu', h_graph)
        log_sigma = self.params.affine('encoder.log_sigma', h_graph)
        return mu, log_sigma, h_graph

    def encode_many(self, molecules):
        batch = GraphBatch.from_molecules(list(molecules), self.elements)
        mu, log_sigma, h_graph = self.encode_tensors(batch)
        return mu.data.copy(), log_sigma.data.copy(), h_graph.data.copy()

    def encode(self, mol):
        """Latent Gaussian and graph state ``h_G`` of one molecule"""
        mu, log_sigma, h_graph = self.encode_many([mol])
        return LatentGaussian(mu[0], log_sigma[0]), h_graph[0]

    # fragment sequence decoder

    def token_mask(self, step, atoms):
        """Additive logit mask: STOP is unavailable first, fragments may not exceed the atom cap"""
        mask = np.zeros(self.vocab.num_tokens)
        mask[:-1][self.token_sizes[:-1] + atoms > self.max_atoms] = MASKED
        if step == 0:
            mask[self.stop_id] = MASKED
        return mask

    def decoder_start(self, z):
        return tanh(self.params.affine('decoder.init', z))

    def decoder_step(self, h, z, previous):
        """Advance the recurrent state by the previous tokens; returns ``(h, logits)``"""
        p = self.params
        token = gather(p['decoder.embedding'], previous) @ p['decoder.token_in']
        h = tanh(p.affine('decoder.recur', h) + token + z @ p['decoder.latent_in'])
        return h, p.affine('decoder.out', h)

    def fragment_log_probs(self, z, sequences):
        """
        Teacher-forced log-probability of each token sequence under the masked
        step distributions.

        Returns ``(log_probs (B,) tensor, correct tokens, total tokens)``.
        """
        count = len(sequences)
        length = max(len(s) for s in sequences)
        rows = np.arange(count)
        h = self.decoder_start(z)
        previous = np.full(count, self.bos_id, dtype=np.int64)
        atoms = np.zeros(count, dtype=np.int64)
        total, correct, seen = None, 0, 0
        for step in range(length):
            active = np.array([step < len(s) for s in sequences])
            targets = np.array([s[step] if step < len(s) else 0 for s in sequences], dtype=np.int64)
            mask = np.stack([self.token_mask(step, atoms[b]) for b in range(count)])
            h, logits = self.decoder_step(h, z, previous)
            log_probs = log_softmax(logits + mask)
            picked = pick(log_probs, rows, targets) * active.astype(np.float64)
            total = picked if total is None else total + picked
            correct += int(((log_probs.data.argmax(axis=1) == targets) & active).sum())
            seen += int(active.sum())
            atoms = atoms + np.where(active, self.token_sizes[np.minimum(targets, self.stop_id)], 0)
            previous = targets
        return total, correct, seen

    def sequence_log_prob(self, z, tokens):
        """Log-probability of one token sequence given a latent vector"""
        total, _, _ = self.fragment_log_probs(Tensor(np.asarray(z)[None, :]), [list(tokens)])
        return float(total.data[0])

    # edge predictor

    def edge_logits(self, union_batch, node_tokens, pairs, pair_graph, z):
        p = self.params
        embedded = gather(p['decoder.embedding'], node_tokens)
        h = self.edge_trunk.node_states(union_batch, x=concat([Tensor(union_batch.x), embedded], axis=1))
        hu, hv = gather(h, pairs[:, 0]), gather(h, pairs[:, 1])
        joined = concat([hu + hv, hu * hv, gather(z, pair_graph)], axis=1)
        return p.affine('edge.out', tanh(p.affine('edge.hidden', joined)))

    def edge_log_probs(self, z, union, fragment_ids, owner):
        """Log-softmax over (none, 1, 2, 3) for every cross-fragment pair of ``union``"""
        pairs = cross_pairs(owner)
        batch = GraphBatch.from_molecules([union], self.elements)
        node_tokens = np.asarray([fragment_ids[p] for p in owner], dtype=np.int64)
        logits = self.edge_logits(
            batch, node_tokens, pairs, np.zeros(len(pairs), dtype=np.int64), Tensor(np.asarray(z)[None, :])
        )
        return pairs, log_softmax(logits).data.astype(np.float64)

    # objective

    def batch_elbo(self, examples, eps):
        """
        Mean negative ELBO over ``examples`` with the reparameterization noise
        ``eps`` (B x latent_dim) supplied by the caller.
        """
        eps = np.asarray(eps)
        if eps.shape != (len(examples), self.latent_dim):
            raise ShapeError('batch_elbo', eps.shape, (len(examples), self.latent_dim))
        batch = GraphBatch.from_features([ex.features for ex in examples])
        mu, log_sigma, _ = self.encode_tensors(batch)
        z = mu + exp(log_sigma) * eps

        fragment_lp, correct, seen = self.fragment_log_probs(z, [list(ex.tokens) for ex in examples])

        union = GraphBatch.from_features([ex.union for ex in examples])
        offsets = np.cumsum([0] + [ex.union.num_nodes for ex in examples[:-1]])
        pairs = np.concatenate([ex.pairs + off for ex, off in zip(examples, offsets)]).reshape(-1, 2)
        pair_graph = np.concatenate([np.full(len(ex.pairs), b) for b, ex in enumerate(examples)]).astype(np.int64)
        labels = np.concatenate([ex.pair_labels for ex in examples]).astype(np.int64)
        node_tokens = np.concatenate([ex.node_tokens for ex in examples])
        logits = self.edge_logits(union, node_tokens, pairs, pair_graph, z)
        edge_lp = tsum(pick(log_softmax(logits), np.arange(len(labels)), labels))

        kl = kl_divergence(mu, log_sigma)
        reconstruction = -(tsum(fragment_lp) + edge_lp)
        loss = (reconstruction + kl) / len(examples)
        stats = {
            'kl': kl.item() / len(examples),
            'reconstruction': reconstruction.item() / len(examples),
            'fragment_correct': correct,
            'fragment_total': seen,
            'edge_correct': int((logits.data.argmax(axis=1) == labels).sum()) if len(labels) else 0,
            'edge_total': len(labels),
        }
        return loss, stats

    def elbo_loss(self, mol, eps=None):
        """Negative ELBO of one molecule (eps=0 evaluates at the mean)"""
        example = prepare_example(mol, self.vocab, self.elements)
        eps = np.zeros((1, self.latent_dim)) if eps is None else np.asarray(eps).reshape(1, -1)
        loss, _ = self.batch_elbo([example], eps)
        return loss

    # persistence

    def metadata(self):
        return {
            'kind': self.kind,
            'elements': list(self.elements),
            'latent_dim': self.latent_dim,
            'hidden': self.hidden,
            'layers': self.layers,
            'update': self.update,
            'n_max': self.n_max,
            'max_atoms': self.max_atoms,
            'vocab_size': len(self.vocab),
            'vocab_digest': vocab_digest(self.vocab),
        }

    def save(self, path, **extra):
        save_checkpoint(path, self.params.state_dict(), {**self.metadata(), **extra})
        return path

    @classmethod
    def load(cls, path, vocab):
        tensors, meta = load_checkpoint(path)
        if meta.get('kind') != cls.kind:
            raise CheckpointError(f"{path} holds a {meta.get('kind')!r} checkpoint, expected vae", code='kind')
        if meta.get('vocab_digest') != vocab_digest(vocab):
            raise CheckpointError(f"{path} was trained with a different fragment vocabulary", code='vocab_mismatch')
        model = cls(vocab, meta['elements'], meta['latent_dim'], meta['hidden'], meta['layers'],
                    meta['update'], meta['n_max'], meta['max_atoms'])
        model.params.load_state_dict(tensors)
        model.params.freeze()
        return model


def kl_divergence(mu, log_sigma):
    """Closed-form KL(N(mu, sigma^2) || N(0, 1)) summed over all entries"""
    return tsum(0.5 * (mu * mu + exp(2.0 * log_sigma) - 1.0 - 2.0 * log_sigma))
