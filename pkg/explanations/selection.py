"""
Greedy top-k selection of the global explanation set.
"""

import logging
from dataclasses import dataclass

from core.config import SELECTION_MODES
from core.exceptions import ConfigError

logger = logging.getLogger(__name__)


@dataclass(frozen=True)
class Selected:
    index: int
    candidate: object
    gain: float


def _distinct(candidates):
    seen, kept = set(), []
    for index, candidate in enumerate(candidates):
        if candidate.smiles in seen:
            continue
        seen.add(candidate.smiles)
        kept.append(index)
    return kept


def set_objective(candidates, alpha, beta, n_inputs):
    """``alpha * sum(p) + beta * coverage(union)`` of a candidate set"""
    covered = 0
    for candidate in candidates:
        covered |= candidate.covered
    return alpha * sum(c.probability for c in candidates if c.valid) + beta * covered.bit_count() / n_inputs


def greedy_topk(candidates, k, mode='set-coverage', alpha=1.0, beta=10.0, n_inputs=None):
    """
    Pick up to ``k`` scored candidates, in selection order.

    ``modular`` ranks by local score. ``set-coverage`` repeatedly adds the
    candidate with the largest ``alpha * p + beta * (new inputs covered) / n``.
    Ties go to the lowest candidate index; repeated SMILES are considered once.
    """
    if mode not in SELECTION_MODES:
        raise ConfigError(f"selection mode must be one of {', '.join(SELECTION_MODES)}", code='selection_mode')
    if k < 1:
        raise ConfigError("k must be >= 1", code='k')
    candidates = list(candidates)
    pool = _distinct(candidates)
    if k > len(pool):
        logger.warning(f"Asked for {k} explanations but only {len(pool)} distinct candidates exist")

    if mode == 'modular':
        ranked = sorted(pool, key=lambda i: (-candidates[i].score, i))
        return [Selected(i, candidates[i], candidates[i].score) for i in ranked[:k]]

    if n_inputs is None or n_inputs < 1:
        raise ConfigError("set-coverage selection needs the number of inputs", code='n_inputs')
    selected, covered = [], 0
    remaining = list(pool)
    while remaining and len(selected) < k:
        best, best_gain = None, None
        for i in remaining:
            c = candidates[i]
            gain = (alpha * c.probability if c.valid else 0.0) + beta * (
                (covered | c.covered).bit_count() - covered.bit_count()) / n_inputs
            if best_gain is None or gain > best_gain:
                best, best_gain = i, gain
        selected.append(Selected(best, candidates[best], best_gain))
        covered |= candidates[best].covered
        remaining.remove(best)
    return selected
