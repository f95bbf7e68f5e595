"""
Latent-shift adapter: a Gaussian policy over mean shifts of the generator's
latent distribution, and the critic that estimates the reward of a state.
"""

import math
from dataclasses import dataclass

import numpy as np

from core.config import ADAPTER_INITS
from core.exceptions import CheckpointError, ConfigError, NonFiniteError, ShapeError
from core.numkit import ParameterSet, Tensor, as_tensor, exp, load_checkpoint, reshape, save_checkpoint, tanh, tsum
from generator.vae import LatentGaussian

LOG_STD_INIT = math.log(0.5)
HALF_LOG_TWO_PI = 0.5 * math.log(2 * math.pi)


@dataclass(frozen=True)
class GaussianPolicy:
    """Diagonal Gaussian over actions (latent mean shifts)"""
    mean: np.ndarray
    std: np.ndarray

    def sample(self, rng):
        return self.mean + self.std * rng.standard_normal(self.mean.shape)

    def log_prob(self, action):
        action = np.asarray(action, dtype=np.float64)
        z = (action - self.mean) / self.std
        return float(np.sum(-0.5 * z * z - np.log(self.std) - HALF_LOG_TWO_PI))


def shifted_latent(gaussian, action):
    """Move the latent mean by ``action``; the spread is left alone"""
    action = np.asarray(action)
    if action.shape != gaussian.mu.shape:
        raise ShapeError('shifted_latent', gaussian.mu.shape, action.shape)
    return LatentGaussian(gaussian.mu + action, gaussian.log_sigma)


class AdapterModel:
    """
    Policy and critic perceptrons over the encoder graph state ``h_G``.

    ``init='zero'`` zeroes the policy output layer so training starts from the
    unshifted generator; ``init='random'`` leaves it randomly initialised.
    """

    kind = 'adapter'

    def __init__(self, input_dim, latent_dim, hidden=400, init='zero', rng=None):
        if init not in ADAPTER_INITS or init == 'auto':
            raise ConfigError(f"adapter init must be zero or random, got {init!r}", code='adapter_init')
        self.input_dim = input_dim
        self.latent_dim = latent_dim
        self.hidden = hidden
        self.init = init
        zero = rng is None
        p = self.params = ParameterSet()
        p.linear('policy.hidden', rng, input_dim, hidden, zero=zero)
        p.linear('policy.out', rng, hidden, latent_dim, zero=zero or init == 'zero')
        p.add('policy.log_std', np.full(latent_dim, LOG_STD_INIT))
        p.linear('critic.hidden', rng, input_dim, hidden, zero=zero)
        p.linear('critic.out', rng, hidden, 1, zero=zero)

    @classmethod
    def from_config(cls, input_dim, config, rng=None):
        return cls(input_dim, config.latent_dim, config.adapter_hidden, config.resolved_adapter_init(), rng)

    def _check_input(self, h):
        if h.shape[-1] != self.input_dim:
            raise ShapeError('adapter', h.shape, (self.input_dim,))

    def policy_mean(self, h):
        p = self.params
        return p.affine('policy.out', tanh(p.affine('policy.hidden', h)))

    def log_prob(self, h, actions):
        """Per-row log density of ``actions`` (B x d) under the policy at ``h`` (B x input)"""
        log_std = self.params['policy.log_std']
        scaled = (as_tensor(actions) - self.policy_mean(h)) * exp(-log_std)
        per_dim = -0.5 * scaled * scaled - log_std - HALF_LOG_TWO_PI
        return tsum(per_dim, axis=1)

    def values(self, h):
        p = self.params
        out = p.affine('critic.out', tanh(p.affine('critic.hidden', h)))
        return reshape(out, (out.shape[0],))

    def policy_dist(self, h_graph):
        """Action distribution for one graph state"""
        h_graph = np.asarray(h_graph)
        self._check_input(h_graph)
        mean = self.policy_mean(Tensor(h_graph[None, :])).data[0].astype(np.float64)
        std = np.exp(self.params['policy.log_std'].data.astype(np.float64))
        if not (np.all(np.isfinite(mean)) and np.all(np.isfinite(std))):
            raise NonFiniteError('policy', "policy produced non-finite parameters")
        return GaussianPolicy(mean, std)

    def critic_value(self, h_graph):
        h_graph = np.asarray(h_graph)
        self._check_input(h_graph)
        return float(self.values(Tensor(h_graph[None, :])).data[0])

    def metadata(self):
        return {
            'kind': self.kind,
            'input_dim': self.input_dim,
            'latent_dim': self.latent_dim,
            'hidden': self.hidden,
            'init': self.init,
        }

    def save(self, path, **extra):
        save_checkpoint(path, self.params.state_dict(), {**self.metadata(), **extra})
        return path

    @classmethod
    def load(cls, path):
        tensors, meta = load_checkpoint(path)
        if meta.get('kind') != cls.kind:
            raise CheckpointError(f"{path} holds a {meta.get('kind')!r} checkpoint, expected adapter", code='kind')
        model = cls(meta['input_dim'], meta['latent_dim'], meta['hidden'], meta['init'])
        model.params.load_state_dict(tensors)
        model.params.freeze()
        return model
