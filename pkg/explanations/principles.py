"""
The explanation principles: validity, counterfactual probability and coverage
of the explained inputs, combined into a local score, plus the set-level
coverage and cost metrics.
"""

import logging
from dataclasses import dataclass

from chemistry.canonical import canonical_key
from chemistry.fingerprints import Fingerprinter, tanimoto
from chemistry.molecule import Molecule, check_validity
from core.exceptions import ChemistryError, FeaturizationError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class CandidateScore:
    """
    Local reward of one candidate. ``covered`` is a bitset over the explained
    inputs: bit ``i`` is set when input ``i`` lies within ``delta``.
    """
    smiles: str
    molecule: Molecule
    valid: bool
    probability: float
    predicted_class: int
    coverage: float
    covered: int
    score: float
    counterfactual: bool

    @property
    def covered_indices(self):
        return [i for i in range(self.covered.bit_length()) if self.covered >> i & 1]

    def to_json(self):
        return {
            'smiles': self.smiles,
            'valid': self.valid,
            'p': self.probability,
            'predicted_class': self.predicted_class,
            'cov_individual': self.coverage,
            'score': self.score,
            'counterfactual': self.counterfactual,
        }


def local_score(valid, probability, coverage, alpha, beta):
    return (alpha * probability + beta * coverage) if valid else 0.0


INVALID = CandidateScore('', None, False, 0.0, -1, 0.0, 0, 0.0, False)


class PrincipleScorer:
    """
    Scores candidates against a fixed set of explained inputs.

    Results are cached by canonical SMILES, so isomorphic candidates are
    scored once.
    """

    def __init__(self, inputs, gnn, target_class, alpha=1.0, beta=10.0, delta=0.87, fingerprinter=None):
        self.inputs = list(inputs)
        if not self.inputs:
            raise ChemistryError("there are no inputs to explain", code='empty_inputs')
        self.gnn = gnn
        self.target_class = target_class
        self.alpha = alpha
        self.beta = beta
        self.delta = delta
        self.fingerprinter = fingerprinter or Fingerprinter()
        self._input_fps = [self.fingerprinter(mol) for mol in self.inputs]
        self._cache = {}

    @classmethod
    def from_config(cls, inputs, gnn, target_class, config):
        return cls(inputs, gnn, target_class, config.alpha, config.beta, config.delta,
                   Fingerprinter(config.fp_radius, config.fp_nbits))

    @property
    def num_inputs(self):
        return len(self.inputs)

    def distances(self, mol):
        fp = self.fingerprinter(mol)
        return [1.0 - tanimoto(fp, other) for other in self._input_fps]

    def covered_bits(self, mol):
        bits = 0
        for i, d in enumerate(self.distances(mol)):
            if d <= self.delta:
                bits |= 1 << i
        return bits

    def score(self, candidate):
        """CandidateScore for a molecule; anything else (a decode failure, None) scores as invalid"""
        if not isinstance(candidate, Molecule):
            return INVALID
        key = canonical_key(candidate)
        cached = self._cache.get(key)
        if cached is None:
            cached = self._cache[key] = self._score(key, candidate)
        return cached

    def reward(self, candidate):
        return self.score(candidate).score

    def _score(self, key, mol):
        if not check_validity(mol).valid:
            return CandidateScore(key, mol, False, 0.0, -1, 0.0, 0, 0.0, False)
        try:
            probs = self.gnn.forward(mol)
        except FeaturizationError as e:
            logger.debug(f"Candidate {key} cannot be scored: {e.message}")
            return CandidateScore(key, mol, False, 0.0, -1, 0.0, 0, 0.0, False)
        probability = float(probs[self.target_class])
        predicted = int(probs.argmax())
        covered = self.covered_bits(mol)
        coverage_ = covered.bit_count() / self.num_inputs
        return CandidateScore(
            smiles=key,
            molecule=mol,
            valid=True,
            probability=probability,
            predicted_class=predicted,
            coverage=coverage_,
            covered=covered,
            score=local_score(True, probability, coverage_, self.alpha, self.beta),
            counterfactual=predicted == self.target_class,
        )

    def closest_inputs(self, mol, count=5):
        """``count`` nearest inputs as ``(index, distance)``, nearest first"""
        ranked = sorted(enumerate(self.distances(mol)), key=lambda item: (item[1], item[0]))
        return ranked[:count]


def nearest_distances(candidates, inputs, fingerprinter):
    """For each input, the distance to its nearest candidate"""
    candidate_fps = [fingerprinter(c) for c in candidates]
    return [min(1.0 - tanimoto(fingerprinter(g), fp) for fp in candidate_fps) for g in inputs]


def coverage(candidates, inputs, delta, fingerprinter=None):
    """Fraction of inputs within ``delta`` of their nearest candidate"""
    inputs, candidates = list(inputs), list(candidates)
    if not inputs:
        raise ChemistryError("coverage is undefined without inputs", code='empty_inputs')
    if not candidates:
        return 0.0
    nearest = nearest_distances(candidates, inputs, fingerprinter or Fingerprinter())
    return sum(1 for d in nearest if d <= delta) / len(inputs)


def cost(candidates, inputs, fingerprinter=None):
    """Mean distance from each input to its nearest candidate"""
    inputs, candidates = list(inputs), list(candidates)
    if not candidates:
        raise ChemistryError("cost is undefined for an empty explanation set", code='empty_candidates')
    if not inputs:
        raise ChemistryError("cost is undefined without inputs", code='empty_inputs')
    nearest = nearest_distances(candidates, inputs, fingerprinter or Fingerprinter())
    return sum(nearest) / len(inputs)
