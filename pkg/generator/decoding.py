"""
Latent vector to molecule: fragment sequence search, bond assembly and
connectivity repair.
"""

import logging
from dataclasses import dataclass, field

import numpy as np
from networkx.utils import UnionFind

from chemistry.molecule import Molecule, allowed_valences, check_validity
from core.config import DECODE_MODES
from core.exceptions import ConfigError
from core.numkit import Tensor
from .vae import EDGE_CLASSES, NO_BOND

logger = logging.getLogger(__name__)

# Masked logits sit near -1e9; anything below this is treated as unavailable.
UNAVAILABLE = -1e8


@dataclass
class DecodeTrace:
    """Step and edge log-probabilities of one decoded candidate"""
    tokens: list
    step_log_probs: list
    fragment_ids: list
    edges: list = field(default_factory=list)
    edge_log_prob: float = 0.0

    @property
    def sequence_log_prob(self):
        return float(sum(self.step_log_probs))

    @property
    def log_likelihood(self):
        return self.sequence_log_prob + self.edge_log_prob

    def to_json(self):
        return {
            'tokens': [int(t) for t in self.tokens],
            'step_log_probs': [float(v) for v in self.step_log_probs],
            'fragment_ids': [int(t) for t in self.fragment_ids],
            'edges': [[int(u), int(v), int(o)] for u, v, o in self.edges],
            'edge_log_prob': float(self.edge_log_prob),
            'log_likelihood': self.log_likelihood,
        }


@dataclass
class DecodeFailure:
    """No candidate passed the validity check; ``attempt`` is the most likely invalid one"""
    reason: str
    attempt: Molecule = None
    trace: DecodeTrace = None


@dataclass(frozen=True)
class _Hypothesis:
    tokens: tuple
    step_log_probs: tuple
    state: np.ndarray
    atoms: int

    @property
    def score(self):
        return float(sum(self.step_log_probs))


def _log_softmax(values):
    shifted = values - values.max(axis=1, keepdims=True)
    return shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))


def _start(model, z):
    state = model.decoder_start(Tensor(np.asarray(z)[None, :])).data[0]
    return _Hypothesis((), (), state, 0)


def _advance(model, z, hypotheses):
    """One decoder step for every hypothesis; returns (new states, masked log-probs)"""
    states = Tensor(np.stack([h.state for h in hypotheses]))
    previous = np.array([h.tokens[-1] if h.tokens else model.bos_id for h in hypotheses], dtype=np.int64)
    latent = Tensor(np.repeat(np.asarray(z)[None, :], len(hypotheses), axis=0))
    new_states, logits = model.decoder_step(states, latent, previous)
    masks = np.stack([model.token_mask(len(h.tokens), h.atoms) for h in hypotheses])
    return new_states.data, _log_softmax(logits.data.astype(np.float64) + masks)


def _extend(model, parent, token, log_prob, state):
    return _Hypothesis(
        parent.tokens + (token,),
        parent.step_log_probs + (float(log_prob),),
        state,
        parent.atoms + int(model.token_sizes[token]),
    )


def _finished(model, hyp):
    return hyp.tokens[-1] == model.stop_id or len(hyp.tokens) >= model.n_max


def beam_search(model, z, beam):
    """
    Deterministic beam search over fragment sequences. A sequence ends with
    STOP or after ``model.n_max`` fragments. Finished hypotheses come back
    most likely first.
    """
    live, finished = [_start(model, z)], []
    while live:
        states, log_probs = _advance(model, z, live)
        expansions = [
            (hyp.score + log_probs[b, token], b, int(token))
            for b, hyp in enumerate(live)
            for token in np.flatnonzero(log_probs[b] > UNAVAILABLE)
        ]
        expansions.sort(key=lambda item: (-item[0], item[1], item[2]))
        survivors = []
        for _, b, token in expansions[:beam]:
            hyp = _extend(model, live[b], token, log_probs[b, token], states[b])
            (finished if _finished(model, hyp) else survivors).append(hyp)
        live = survivors
    finished.sort(key=lambda h: (-h.score, h.tokens))
    return finished


def sample_sequences(model, z, count, temperature, rng):
    """
    ``count`` independent sequences drawn from the step distributions sharpened
    or flattened by ``temperature``. Recorded log-probs are the untempered ones.
    """
    live, finished = [_start(model, z) for _ in range(count)], []
    while live:
        states, log_probs = _advance(model, z, live)
        survivors = []
        for b, hyp in enumerate(live):
            tempered = np.where(log_probs[b] > UNAVAILABLE, log_probs[b] / temperature, -np.inf)
            weights = np.exp(tempered - tempered.max())
            token = int(rng.choice(len(weights), p=weights / weights.sum()))
            child = _extend(model, hyp, token, log_probs[b, token], states[b])
            (finished if _finished(model, child) else survivors).append(child)
        live = survivors
    return finished


def _capacity(atom):
    valences = allowed_valences(atom)
    return max(valences) if valences else 0


def assemble(model, z, fragment_ids):
    """
    Place the fragments and choose the bonds between them.

    Each cross-fragment pair takes its most likely label. Predicted bonds are
    accepted most-confident first while both atoms keep valence to spare. If
    the result is disconnected, components are joined Kruskal-style by the
    most probable remaining bond labels that still fit the valences.

    Returns ``(molecule, edge log-probability, inter-fragment bonds)``.
    """
    union, owner = model.vocab.union(fragment_ids)
    pairs, log_probs = model.edge_log_probs(z, union, fragment_ids, owner)
    used = [union.total_bond_order(i) for i in range(union.num_atoms)]
    capacity = [_capacity(atom) for atom in union.atoms]
    chosen = {}

    def fits(row, order):
        u, v = pairs[row]
        return used[u] + order <= capacity[u] and used[v] + order <= capacity[v]

    def accept(row, label):
        u, v = pairs[row]
        order = EDGE_CLASSES[label]
        used[u] += order
        used[v] += order
        chosen[row] = label

    if len(pairs):
        predicted = log_probs.argmax(axis=1)
        bonded = [row for row in range(len(pairs)) if predicted[row] != NO_BOND]
        for row in sorted(bonded, key=lambda r: (-log_probs[r, predicted[r]], r)):
            if fits(row, EDGE_CLASSES[predicted[row]]):
                accept(row, int(predicted[row]))

    components = UnionFind(range(union.num_atoms))
    for bond in union.bonds:
        components.union(bond.i, bond.j)
    for row in chosen:
        components.union(*map(int, pairs[row]))
    groups = len(list(components.to_sets()))

    if groups > 1:
        options = sorted(
            (-log_probs[row, label], row, label)
            for row in range(len(pairs)) if row not in chosen
            for label in range(1, len(EDGE_CLASSES))
        )
        for _, row, label in options:
            if groups == 1:
                break
            u, v = map(int, pairs[row])
            if row in chosen or components[u] == components[v] or not fits(row, EDGE_CLASSES[label]):
                continue
            accept(row, label)
            components.union(u, v)
            groups -= 1

    labels = np.zeros(len(pairs), dtype=np.int64)
    for row, label in chosen.items():
        labels[row] = label
    edge_log_prob = float(log_probs[np.arange(len(pairs)), labels].sum()) if len(pairs) else 0.0
    edges = [(int(pairs[row][0]), int(pairs[row][1]), EDGE_CLASSES[label]) for row, label in sorted(chosen.items())]
    bonds = [(b.i, b.j, b.order) for b in union.bonds] + edges
    return Molecule(union.atoms, bonds), edge_log_prob, edges


def edge_log_likelihood(model, z, fragment_ids, edges):
    """Log-probability of an inter-fragment bond assignment (every other pair unbonded)"""
    union, owner = model.vocab.union(fragment_ids)
    pairs, log_probs = model.edge_log_probs(z, union, fragment_ids, owner)
    lookup = {(min(u, v), max(u, v)): EDGE_CLASSES.index(order) for u, v, order in edges}
    labels = [lookup.get((int(u), int(v)), NO_BOND) for u, v in pairs]
    return float(sum(log_probs[row, label] for row, label in enumerate(labels)))


def _candidate(model, z, hyp):
    fragment_ids = [t for t in hyp.tokens if t != model.stop_id]
    mol, edge_log_prob, edges = assemble(model, z, fragment_ids)
    trace = DecodeTrace(list(hyp.tokens), list(hyp.step_log_probs), fragment_ids, edges, edge_log_prob)
    return mol, trace


def decode_with_trace(model, z, mode='beam', beam=10, temperature=1.0, rng=None):
    """
    Decode ``z`` into the most likely candidate that passes the validity
    check. Returns ``(molecule or DecodeFailure, trace)``.
    """
    if mode not in DECODE_MODES:
        raise ConfigError(f"decode mode must be one of {', '.join(DECODE_MODES)}", code='decode_mode')
    if mode == 'beam':
        hypotheses = beam_search(model, z, beam)
    else:
        if rng is None:
            raise ConfigError("sampling decode needs a random stream", code='decode_rng')
        hypotheses = sample_sequences(model, z, beam, temperature, rng)

    candidates = [_candidate(model, z, hyp) for hyp in hypotheses]
    candidates.sort(key=lambda item: -item[1].log_likelihood)
    for mol, trace in candidates:
        if check_validity(mol).valid:
            return mol, trace
    if not candidates:
        return DecodeFailure('no fragment sequence was produced'), None
    mol, trace = candidates[0]
    return DecodeFailure('no candidate passed the validity check', mol, trace), trace


def decode(model, z, mode='beam', beam=10, temperature=1.0, rng=None):
    """Molecule or DecodeFailure for latent vector ``z``"""
    return decode_with_trace(model, z, mode, beam, temperature, rng)[0]


def decode_tokens(model, z, fragment_ids):
    """
    Assemble a given fragment sequence (as if STOP followed it). Returns
    ``(molecule or DecodeFailure, trace)``.
    """
    hyp = _start(model, z)
    for token in list(fragment_ids) + [model.stop_id]:
        if len(hyp.tokens) >= model.n_max:
            break
        states, log_probs = _advance(model, z, [hyp])
        hyp = _extend(model, hyp, int(token), log_probs[0, token], states[0])
    mol, trace = _candidate(model, z, hyp)
    if check_validity(mol).valid:
        return mol, trace
    return DecodeFailure('forced sequence is not a valid molecule', mol, trace), trace
