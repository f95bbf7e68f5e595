"""
Adapter alignment with proximal policy optimisation.

Each transition is credited on its own: the advantage is a Monte-Carlo
estimate of Q (the mean score of candidates drawn from the shifted latent)
minus the critic's value, normalised over the batch.
"""

import logging
import math
from dataclasses import dataclass, field

import numpy as np

from chemistry.molecule import Molecule
from core.exceptions import PPOError, TrainingError
from core.numkit import Adam, AdamState, ComputationTape, Tensor, clip, exp, mean, minimum
from .adapter import AdapterModel
from .chain import next_state

logger = logging.getLogger(__name__)

WARMUP_FRACTION = 0.1
FINAL_LR_FRACTION = 0.1


@dataclass
class Transition:
    state: Molecule
    h_graph: np.ndarray
    action: np.ndarray
    old_log_prob: float
    reward: float
    q: float = 0.0
    value: float = 0.0
    candidate: object = None
    input_index: int = 0
    step: int = 0


@dataclass
class Episode:
    input_index: int
    transitions: list = field(default_factory=list)

    @property
    def mean_reward(self):
        return float(np.mean([t.reward for t in self.transitions])) if self.transitions else 0.0


class EpisodeBuffer:
    """Transitions of the current update, one episode of ``length`` steps per scheduled input"""

    def __init__(self, length):
        self.length = length
        self.episodes = []

    def add(self, episode):
        if len(episode.transitions) != self.length:
            raise TrainingError(
                f"episode has {len(episode.transitions)} steps, expected {self.length}", code='episode_length'
            )
        self.episodes.append(episode)

    @property
    def transitions(self):
        return [t for episode in self.episodes for t in episode.transitions]

    def __len__(self):
        return sum(len(episode.transitions) for episode in self.episodes)

    def mean_reward(self):
        rewards = [t.reward for t in self.transitions]
        return float(np.mean(rewards)) if rewards else 0.0

    def arrays(self):
        transitions = self.transitions
        return (
            np.stack([t.h_graph for t in transitions]),
            np.stack([t.action for t in transitions]),
            np.array([t.old_log_prob for t in transitions], dtype=np.float64),
            np.array([t.q for t in transitions], dtype=np.float64),
            np.array([t.value for t in transitions], dtype=np.float64),
        )


class UcbStats:
    """Per-input pull counts with Welford running mean and variance of episode scores"""

    def __init__(self, size):
        self.counts = np.zeros(size, dtype=np.int64)
        self.means = np.zeros(size)
        self._m2 = np.zeros(size)

    def __len__(self):
        return len(self.counts)

    def update(self, index, score):
        self.counts[index] += 1
        delta = score - self.means[index]
        self.means[index] += delta / self.counts[index]
        self._m2[index] += delta * (score - self.means[index])

    def variance(self, index):
        n = self.counts[index]
        return float(self._m2[index] / n) if n else 0.0


def ucb_select(stats, c=1.0):
    """
    Input index to roll out next: unvisited inputs first in index order, then
    the largest ``mean + c * sqrt(var / n)``, lowest index on ties.
    """
    if not len(stats):
        raise TrainingError("no inputs to schedule", code='empty_inputs')
    unvisited = np.flatnonzero(stats.counts == 0)
    if len(unvisited):
        return int(unvisited[0])
    bonus = [math.sqrt(stats.variance(i) / stats.counts[i]) for i in range(len(stats))]
    priority = stats.means + c * np.array(bonus)
    return int(np.argmax(priority))


def clipped_surrogate(ratio, advantage, eps):
    """Per-sample ``min(ratio * A, clip(ratio, 1 - eps, 1 + eps) * A)``"""
    ratio, advantage = np.asarray(ratio, dtype=np.float64), np.asarray(advantage, dtype=np.float64)
    return np.minimum(ratio * advantage, np.clip(ratio, 1 - eps, 1 + eps) * advantage)


def surrogate_objective(new_log_prob, old_log_prob, advantage, eps):
    """Tensor form of the mean clipped surrogate; returns ``(objective, ratio)``"""
    ratio = exp(new_log_prob - np.asarray(old_log_prob))
    unclipped = ratio * advantage
    clipped = clip(ratio, 1 - eps, 1 + eps) * advantage
    return mean(minimum(unclipped, clipped)), ratio


def normalise_advantages(q, values):
    advantage = np.asarray(q, dtype=np.float64) - np.asarray(values, dtype=np.float64)
    return (advantage - advantage.mean()) / (advantage.std() + 1e-8)


def kl_estimate(ratio):
    """``mean((r - 1) - log r)``, a non-negative estimate of KL(new || old)"""
    ratio = np.asarray(ratio, dtype=np.float64)
    return float(np.mean((ratio - 1.0) - np.log(ratio)))


def lr_schedule(update, total, lr):
    """Linear warmup over the first tenth of the updates, then linear decay to a tenth of ``lr``"""
    warmup = max(1, math.ceil(WARMUP_FRACTION * total))
    if update < warmup:
        return lr * (update + 1) / warmup
    span = max(total - warmup - 1, 1)
    progress = min((update - warmup) / span, 1.0)
    return lr * (1.0 - (1.0 - FINAL_LR_FRACTION) * progress)


def estimate_q(gaussian, chain, scorer, n_samples, rng):
    """Mean score of ``n_samples`` candidates decoded from latents drawn from ``gaussian``"""
    if n_samples < 1:
        raise TrainingError("n_samples must be >= 1", code='n_samples')
    return float(np.mean([scorer.reward(chain.decode(gaussian, rng)) for _ in range(n_samples)]))


def rollout_episode(index, molecule, chain, scorer, length, rng, n_samples=None):
    """
    ``length`` chain steps from ``molecule`` with actions sampled from the
    policy. ``n_samples`` also fills in the Q estimate of every transition.
    """
    adapter = chain.adapter
    episode = Episode(index)
    state = molecule
    for t in range(length):
        step = chain.step(state, rng, mode='sample')
        transition = Transition(
            state=state,
            h_graph=step.h_graph,
            action=np.asarray(step.action, dtype=np.float64),
            old_log_prob=step.log_prob,
            reward=scorer.reward(step.candidate),
            value=adapter.critic_value(step.h_graph) if adapter is not None else 0.0,
            candidate=step.candidate,
            input_index=index,
            step=t,
        )
        if n_samples:
            transition.q = estimate_q(step.gaussian, chain, scorer, n_samples, rng)
        episode.transitions.append(transition)
        state = next_state(step)
    return episode


def rollout(inputs, indices, chain, scorer, length, rng, n_samples=None):
    """One episode per scheduled input index"""
    buffer = EpisodeBuffer(length)
    for index in indices:
        buffer.add(rollout_episode(index, inputs[index], chain, scorer, length, rng, n_samples))
    return buffer


def _copy_adam_state(state):
    return AdamState(state.step, {k: v.copy() for k, v in state.m.items()}, {k: v.copy() for k, v in state.v.items()})


def ppo_update(buffer, adapter, optimizer, eps=0.2, epochs=4, lr=None, value_coef=0.5, kl_limit=0.5):
    """
    ``epochs`` Adam steps on the clipped surrogate plus the critic's squared
    error to Q over the same buffer.

    Before each step, and once after the last one, the KL between the current
    and the rollout policy is estimated; past ``kl_limit`` the parameters and
    optimizer moments revert to their values before the update and
    ``aborted`` is set in the diagnostics.
    """
    if not len(buffer):
        raise TrainingError("cannot update from an empty buffer", code='empty_buffer')
    h, actions, old_log_prob, q, values = buffer.arrays()
    h = Tensor(h)
    advantage = normalise_advantages(q, values)
    snapshot = adapter.params.state_dict()
    adam_snapshot = _copy_adam_state(optimizer.state)
    diagnostics = {'epochs_run': 0, 'aborted': False, 'losses': []}

    def measure(ratio):
        r = ratio.data.astype(np.float64)
        diagnostics['mean_ratio'] = float(r.mean())
        diagnostics['clip_frac'] = float(np.mean(np.abs(r - 1.0) > eps))
        diagnostics['kl'] = kl_estimate(r)
        return diagnostics['kl']

    def revert():
        adapter.params.load_state_dict(snapshot)
        optimizer.state = adam_snapshot
        diagnostics['aborted'] = True
        logger.warning(f"PPO update reverted: KL estimate {diagnostics['kl']:.4f} exceeds {kl_limit}")

    for _ in range(epochs):
        adapter.params.zero_grad()
        with ComputationTape() as tape:
            objective, ratio = surrogate_objective(adapter.log_prob(h, actions), old_log_prob, advantage, eps)
            error = adapter.values(h) - q
            value_loss = mean(error * error)
            loss = -objective + value_coef * value_loss
            if not np.isfinite(loss.item()):
                raise PPOError("PPO loss became non-finite", diagnostics)
            if measure(ratio) > kl_limit:
                revert()
                return diagnostics
            tape.backward(loss)
        optimizer.step(lr)
        diagnostics['epochs_run'] += 1
        diagnostics['policy_loss'] = -objective.item()
        diagnostics['value_loss'] = value_loss.item()
        diagnostics['losses'].append(loss.item())

    _, ratio = surrogate_objective(adapter.log_prob(h, actions), old_log_prob, advantage, eps)
    if not np.all(np.isfinite(ratio.data)):
        raise PPOError("policy ratio became non-finite after the update", diagnostics)
    if measure(ratio) > kl_limit:
        revert()
    return diagnostics


def train_adapter(inputs, chain, scorer, config, rng, log=None):
    """
    Alternate UCB-scheduled rollouts and PPO updates. The adapter parameters
    that produced the best mean episode reward are kept and frozen.

    ``chain.adapter`` is trained in place. Returns ``(adapter, history)``.
    """
    inputs = list(inputs)
    if not inputs:
        raise TrainingError("no inputs to align the adapter on", code='empty_inputs')
    adapter = chain.adapter
    if adapter is None:
        raise TrainingError("the chain has no adapter to train", code='no_adapter')

    optimizer = Adam(adapter.params, config.adapter_lr)
    stats = UcbStats(len(inputs))
    best_reward, best_state, best_update = -np.inf, None, 0
    history = []

    for update in range(config.adapter_updates):
        buffer = EpisodeBuffer(config.t_train)
        for _ in range(config.episodes_per_update):
            index = ucb_select(stats, config.ucb_c)
            episode = rollout_episode(index, inputs[index], chain, scorer, config.t_train, rng, config.n_samples)
            stats.update(index, episode.mean_reward)
            buffer.add(episode)

        mean_reward = buffer.mean_reward()
        if mean_reward > best_reward:
            best_reward, best_update = mean_reward, update
            best_state = adapter.params.state_dict()

        lr = lr_schedule(update, config.adapter_updates, config.adapter_lr)
        diagnostics = ppo_update(buffer, adapter, optimizer, config.ppo_clip, config.ppo_epochs, lr,
                                 config.value_coef, config.kl_limit)
        entry = {
            'update': update,
            'mean_reward': mean_reward,
            'mean_q': float(np.mean([t.q for t in buffer.transitions])),
            'clip_frac': diagnostics.get('clip_frac', 0.0),
            'kl': diagnostics.get('kl', 0.0),
            'lr': lr,
            'policy_loss': diagnostics.get('policy_loss'),
            'value_loss': diagnostics.get('value_loss'),
            'aborted': diagnostics['aborted'],
        }
        history.append(entry)
        if log is not None:
            log.write(entry)
        logger.info(f"Adapter update {update}: mean reward {mean_reward:.4f} kl {entry['kl']:.4f} "
                    f"clip {entry['clip_frac']:.3f} lr {lr:.2e}")

    adapter.params.load_state_dict(best_state)
    adapter.params.freeze()
    logger.info(f"Kept adapter parameters rolled out at update {best_update} (mean reward {best_reward:.4f})")
    return adapter, history


def build_adapter(vae, config, rng):
    """Adapter sized for the generator's graph state"""
    return AdapterModel.from_config(vae.hidden, config, rng)
