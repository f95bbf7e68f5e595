"""
Selection over a candidate pool and the resulting explanation report.
"""

import logging

import pandas as pd

from chemistry.fingerprints import Fingerprinter
from chemistry.smiles import parse_smiles
from core.config import SELECTION_MODES
from .baselines import BASELINES
from .principles import PrincipleScorer, cost, coverage
from .selection import greedy_topk

logger = logging.getLogger(__name__)

REPORT_FORMAT_VERSION = 1

REPORT_SCHEMA = {
    'type': 'object',
    'required': ['format_version', 'method', 'k', 'delta', 'selection_mode', 'coverage', 'cost', 'candidates'],
    'properties': {
        'format_version': {'const': REPORT_FORMAT_VERSION},
        'k': {'type': 'integer', 'minimum': 1},
        'coverage': {'type': 'number', 'minimum': 0, 'maximum': 1},
        'cost': {'type': ['number', 'null']},
        'selection_mode': {'enum': list(SELECTION_MODES)},
        'candidates': {
            'type': 'array',
            'items': {'type': 'object', 'required': ['smiles', 'score', 'p', 'cov_individual', 'gain']},
        },
    },
}


def eligible_candidates(pool, scorer):
    """Scores of the pool's distinct candidates that are valid and counterfactual, in pool order"""
    scored = [scorer.score(parse_smiles(smiles)) for smiles in pool.distinct_smiles()]
    return [s for s in scored if s.valid and s.counterfactual]


def select(pool, scorer, k, mode):
    return greedy_topk(eligible_candidates(pool, scorer), k, mode, scorer.alpha, scorer.beta, scorer.num_inputs)


def set_metrics(members, scorer):
    """``(coverage, cost)`` of a selected set; cost is None for an empty set"""
    fingerprinter = scorer.fingerprinter
    cov = coverage(members, scorer.inputs, scorer.delta, fingerprinter)
    return cov, (cost(members, scorer.inputs, fingerprinter) if members else None)


def metrics_at(pool, scorer, k, mode):
    selected = select(pool, scorer, k, mode)
    cov, cost_ = set_metrics([s.candidate.molecule for s in selected], scorer)
    return {'k': k, 'selected': len(selected), 'coverage': cov, 'cost': cost_}


def build_report(pool, scorer, config, k=None):
    """
    Explanation report for ``pool``: the selected candidates in selection
    order with their local scores, marginal gains and nearest inputs, and the
    coverage and cost of the selection.
    """
    k = k or config.k
    selected = select(pool, scorer, k, config.selection_mode)
    if not selected:
        logger.warning(f"No valid counterfactual survived for method {pool.method}; the report is empty")
    members = [s.candidate.molecule for s in selected]
    cov, cost_ = set_metrics(members, scorer)
    input_smiles = pool.inputs

    candidates = []
    for s in selected:
        entry = s.candidate.to_json()
        entry['gain'] = s.gain
        entry['closest_inputs'] = [
            {'index': index, 'smiles': input_smiles[index], 'distance': distance}
            for index, distance in scorer.closest_inputs(s.candidate.molecule, config.closest_inputs)
        ]
        candidates.append(entry)

    return {
        'format_version': REPORT_FORMAT_VERSION,
        'method': pool.method,
        'k': k,
        'delta': scorer.delta,
        'fp_radius': scorer.fingerprinter.radius,
        'fp_nbits': scorer.fingerprinter.nbits,
        'selection_mode': config.selection_mode,
        'explain_class': pool.explain_class,
        'target_class': pool.target_class,
        'num_inputs': scorer.num_inputs,
        'pool_size': len(pool.distinct_smiles()),
        'coverage': cov,
        'cost': cost_,
        'candidates': candidates,
        'config': config.to_dict(),
        'config_hash': config.config_hash(),
        'seed': config.seed,
    }


def scorer_for_pool(pool, gnn, config):
    """A scorer over the inputs recorded in ``pool`` with the pool's metric settings"""
    return PrincipleScorer(
        pool.input_molecules(), gnn, pool.target_class, config.alpha, config.beta, pool.delta,
        Fingerprinter(pool.fp_radius, pool.fp_nbits),
    )


def existing_pools(layout):
    """Pool files already written in a run directory, adapter first"""
    return [layout.pool(method) for method in ('adapter',) + BASELINES if layout.pool(method).is_file()]


def summarise_metrics(rows):
    """Mean and population standard deviation of coverage and cost per method"""
    summary = []
    for method, group in pd.DataFrame(rows).groupby('method', sort=True):
        costs = group['cost'].dropna()
        summary.append({
            'method': method,
            'pools': int(len(group)),
            'coverage_mean': float(group['coverage'].mean()),
            'coverage_std': float(group['coverage'].std(ddof=0)),
            'cost_mean': float(costs.mean()) if len(costs) else None,
            'cost_std': float(costs.std(ddof=0)) if len(costs) else None,
        })
    return summary
