"""
Comparison methods that write the same candidate pools as the adapter chain:
plain generator sampling, simulated annealing over generator proposals, and
a uniform random walk over single graph edits.
"""

import logging
import math
from dataclasses import dataclass

from chemistry.molecule import BOND_ORDERS, VALENCES, Atom, check_validity, free_valence
from core.exceptions import ConfigError

logger = logging.getLogger(__name__)

BASELINES = ('sample', 'sa', 'walk')


@dataclass(frozen=True)
class SaSchedule:
    """Temperature that starts at ``initial`` and halves every ``period`` steps"""
    initial: float = 0.1
    period: int = 10

    def __post_init__(self):
        if self.initial <= 0:
            raise ConfigError("annealing temperature must be positive", code='sa_temperature')
        if self.period < 1:
            raise ConfigError("halving period must be >= 1", code='sa_period')

    @classmethod
    def from_config(cls, config):
        return cls(config.sa_initial_temperature, config.sa_halving_period)

    def temperature(self, step):
        return self.initial * 0.5 ** (step // self.period)


def metropolis_acceptance(delta, temperature):
    """``min(1, exp(delta / temperature))`` for a score change ``delta``"""
    if delta >= 0:
        return 1.0
    return math.exp(delta / temperature)


def sample_baseline(inputs, chain, scorer, length, streams, pool):
    """
    Decode fresh latents drawn around each input until one is a valid
    counterfactual or ``length`` decodes were spent.
    """
    for index, molecule in enumerate(inputs):
        rng = streams.stream('baseline-sample', index)
        gaussian, _ = chain.vae.encode(molecule)
        for t in range(length):
            candidate = chain.decode(gaussian, rng)
            if scorer.score(candidate).counterfactual:
                pool.add(candidate, index, t)
                break
    return pool


def sa_baseline(inputs, chain, scorer, length, schedule, streams, pool, literal_input=False):
    """
    Simulated annealing over generator proposals. Each step decodes a latent
    drawn around the current state (around the input with ``literal_input``)
    and moves there under the Metropolis rule. Every valid counterfactual
    proposal joins the pool.
    """
    for index, molecule in enumerate(inputs):
        rng = streams.stream('baseline-sa', index)
        current, current_score = molecule, scorer.reward(molecule)
        for t in range(length):
            source = molecule if literal_input else current
            gaussian, _ = chain.vae.encode(source)
            scored = scorer.score(chain.decode(gaussian, rng))
            if not scored.valid:
                continue
            if scored.counterfactual:
                pool.add(scored.molecule, index, t)
            accept = metropolis_acceptance(scored.score - current_score, schedule.temperature(t))
            if rng.random() < accept:
                current, current_score = scored.molecule, scored.score
    return pool


def legal_edits(mol, elements):
    """
    Edit descriptors for one walk step: add an atom on a single bond, delete
    a leaf atom (never the last one), change a bond order, add or remove a bond.
    """
    edits = []
    for i in range(mol.num_atoms):
        if free_valence(mol, i) >= 1:
            edits += [('add_atom', i, element) for element in elements]
    if mol.num_atoms > 1:
        edits += [('delete_atom', i) for i in range(mol.num_atoms) if mol.degree(i) == 1]
    for bond in mol.bonds:
        edits += [('bond', bond.i, bond.j, order) for order in BOND_ORDERS if order != bond.order]
        edits.append(('bond', bond.i, bond.j, 0))
    for i in range(mol.num_atoms):
        for j in range(i + 1, mol.num_atoms):
            if not mol.bond_order(i, j):
                edits.append(('bond', i, j, 1))
    return edits


def apply_edit(mol, edit):
    kind = edit[0]
    if kind == 'add_atom':
        return mol.with_atom(Atom(edit[2]), attach_to=edit[1], order=1)
    if kind == 'delete_atom':
        return mol.without_atom(edit[1])
    return mol.with_bond(edit[1], edit[2], edit[3])


def random_edit(mol, elements, rng):
    """A uniformly chosen edit whose result passes the validity check, or None"""
    edits = legal_edits(mol, elements)
    while edits:
        edit = edits.pop(int(rng.integers(len(edits))))
        result = apply_edit(mol, edit)
        if check_validity(result).valid:
            return result
    return None


def walk_baseline(inputs, scorer, max_steps, streams, pool, elements):
    """
    Random edit walks from every input, advanced round-robin until
    ``max_steps`` edits were made in total.
    """
    elements = [e for e in elements if e in VALENCES]
    inputs = list(inputs)
    states = list(inputs)
    rngs = [streams.stream('baseline-walk', index) for index in range(len(inputs))]
    steps = [0] * len(inputs)
    stuck = set()
    spent = 0
    while spent < max_steps and len(stuck) < len(inputs):
        for index in range(len(inputs)):
            if spent >= max_steps:
                break
            if index in stuck:
                continue
            moved = random_edit(states[index], elements, rngs[index])
            if moved is None:
                stuck.add(index)
                continue
            states[index] = moved
            if scorer.score(moved).counterfactual:
                pool.add(moved, index, steps[index])
            steps[index] += 1
            spent += 1
    if stuck:
        logger.info(f"{len(stuck)} walks stopped early with no valid edit")
    return pool


def run_baseline(method, pipeline, config, length=None, walk_steps=None):
    """
    Candidate pool of ``method`` over the pipeline's inputs. ``length`` is the
    chain length (default ``t_infer``), ``walk_steps`` the total walk budget
    (default ``walk_iterations`` per input).
    """
    length = length or config.t_infer
    streams = config.streams()
    pool = pipeline.new_pool(method)
    if method == 'sample':
        return sample_baseline(pipeline.inputs, pipeline.chain(adapter=False), pipeline.scorer, length, streams, pool)
    if method == 'sa':
        return sa_baseline(pipeline.inputs, pipeline.chain(adapter=False), pipeline.scorer, length,
                           SaSchedule.from_config(config), streams, pool, config.sa_literal_input)
    if method == 'walk':
        budget = walk_steps or config.walk_iterations * len(pipeline.inputs)
        return walk_baseline(pipeline.inputs, pipeline.scorer, budget, streams, pool, pipeline.bundle.elements)
    raise ConfigError(f"unknown baseline {method!r}; choose one of {', '.join(BASELINES)}", code='baseline')
