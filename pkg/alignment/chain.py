"""
One step of the generative chain: encode the current molecule, shift the
latent mean with the adapter, draw a latent and decode it.
"""

from dataclasses import dataclass

import numpy as np

from chemistry.molecule import Molecule
from core.config import ACTION_MODES
from core.exceptions import ConfigError
from generator.decoding import DecodeFailure, decode
from generator.vae import LatentGaussian, sample_latent
from .adapter import shifted_latent


@dataclass
class ChainStep:
    state: Molecule
    h_graph: np.ndarray
    action: np.ndarray
    log_prob: float
    gaussian: LatentGaussian
    candidate: object

    @property
    def decoded(self):
        return not isinstance(self.candidate, DecodeFailure)


class GenerativeChain:
    """
    Frozen generator plus an optional adapter. Without an adapter every
    action is the zero shift, which makes the chain plain generator sampling.
    """

    def __init__(self, vae, adapter=None, decode_mode='beam', beam=10, temperature=1.0, action_mode='mean'):
        if action_mode not in ACTION_MODES:
            raise ConfigError(f"action mode must be one of {', '.join(ACTION_MODES)}", code='action_mode')
        self.vae = vae
        self.adapter = adapter
        self.decode_mode = decode_mode
        self.beam = beam
        self.temperature = temperature
        self.action_mode = action_mode

    @classmethod
    def from_config(cls, vae, adapter, config, action_mode=None):
        return cls(vae, adapter, config.decode_mode, config.beam, config.temperature,
                   action_mode or config.action_mode)

    def act(self, h_graph, rng, mode=None):
        """``(action, log-probability)`` at graph state ``h_graph``"""
        if self.adapter is None:
            return np.zeros(self.vae.latent_dim), 0.0
        policy = self.adapter.policy_dist(h_graph)
        action = policy.sample(rng) if (mode or self.action_mode) == 'sample' else policy.mean
        return action, policy.log_prob(action)

    def decode(self, gaussian, rng):
        z = sample_latent(gaussian, rng)
        return decode(self.vae, z, self.decode_mode, self.beam, self.temperature, rng)

    def step(self, state, rng, mode=None):
        gaussian, h_graph = self.vae.encode(state)
        action, log_prob = self.act(h_graph, rng, mode)
        shifted = shifted_latent(gaussian, action)
        return ChainStep(state, h_graph, action, log_prob, shifted, self.decode(shifted, rng))


def next_state(step):
    """The chain moves to the decoded candidate; a failed decode keeps the current molecule"""
    return step.candidate if step.decoded else step.state
