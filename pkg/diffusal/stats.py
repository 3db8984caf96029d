""" Significance testing, the dueling matrix and importance analyses """

import collections
import itertools
import logging

import numpy as np
import pandas as pd
from scipy import stats as scipy_stats

from . import diffusion
from . import results as results_mod
from . import tools

log = logging.getLogger(__name__)

DEFAULT_ALPHA = 0.05
# Importance scores equal to this many decimals count as tied
TIE_DECIMALS = 12


class StatsError(Exception):
    pass


DuelMatrix = collections.namedtuple('DuelMatrix', ('wins', 'avg_wins', 'avg_losses', 'cells'))


def welch_t_test(a, b):
    """ Two-sided p-value of Welch's unequal-variance t-test

    Two constant samples give 1.0 when their values agree and 0.0 otherwise.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if len(a) < 2 or len(b) < 2:
        raise StatsError('samples need at least 2 values, got {} and {}'.format(len(a), len(b)))
    if a.var() == 0 and b.var() == 0:
        return 1.0 if a[0] == b[0] else 0.0
    return float(scipy_stats.ttest_ind(a, b, equal_var=False).pvalue)


def _accuracy_groups(results):
    frame = results_mod.results_frame(results)
    if frame.empty:
        raise StatsError('no results')
    groups = {key: group['test_accuracy'].values for key, group in
              frame.groupby(['strategy', 'dataset', 'budget'])}
    strategies = sorted(frame['strategy'].unique())
    cells = sorted(set(frame[['dataset', 'budget']].itertuples(index=False, name=None)))
    return groups, strategies, cells


def duel_matrix(results, alpha=DEFAULT_ALPHA):
    """ How often strategy i significantly beats strategy j, over all (dataset, budget) cells

    i wins a cell against j when its mean accuracy is higher and the Welch p-value is below
    `alpha`.

    Returns:
        DuelMatrix: `wins` is a strategies x strategies DataFrame of percentages (row beats
        column); avg_wins / avg_losses average each row / column over the opponents
    """
    groups, strategies, cells = _accuracy_groups(results)
    for strategy, (dataset, budget) in itertools.product(strategies, cells):
        sample = groups.get((strategy, dataset, budget))
        if sample is None or len(sample) < 2:
            raise StatsError('{} on {} at budget {} has fewer than 2 seeds'.format(
                strategy, dataset, budget))

    counts = pd.DataFrame(0, index=strategies, columns=strategies, dtype=np.int64)
    for dataset, budget in cells:
        for i, j in itertools.permutations(strategies, 2):
            a, b = groups[(i, dataset, budget)], groups[(j, dataset, budget)]
            if a.mean() > b.mean() and welch_t_test(a, b) < alpha:
                counts.loc[i, j] += 1

    wins = counts * 100.0 / len(cells)
    opponents = max(len(strategies) - 1, 1)
    avg_wins = wins.sum(axis=1) / opponents
    avg_losses = wins.sum(axis=0) / opponents
    log.info('Dueling matrix over {} strategies and {} cells'.format(len(strategies), len(cells)))
    return DuelMatrix(wins, avg_wins, avg_losses, len(cells))


def duel_document(matrix, alpha=DEFAULT_ALPHA):
    """ duel.json contents """
    strategies = list(matrix.wins.index)
    return dict(alpha=alpha,
                cells=matrix.cells,
                strategies=strategies,
                matrix={i: {j: float(matrix.wins.loc[i, j]) for j in strategies}
                        for i in strategies},
                avg_wins={s: float(matrix.avg_wins[s]) for s in strategies},
                avg_losses={s: float(matrix.avg_losses[s]) for s in strategies})


def _check_budgets(budgets, n):
    for k in budgets:
        if not 1 <= k <= n:
            raise StatsError('budget {} outside [1, {}]'.format(k, n))


def _importance_ranking(matrix, columns):
    return np.round(diffusion.importance_scores(matrix, columns=columns), TIE_DECIMALS)


def importance_degree_overlap(matrix, graph, budgets, columns=False):
    """ Fraction of the top-k most important nodes that are also top-k by degree, per budget """
    _check_budgets(budgets, graph.n)
    importance = _importance_ranking(matrix, columns)
    rows = []
    for k in budgets:
        important = set(tools.top_k(importance, k).tolist())
        high_degree = set(tools.top_k(graph.degrees, k).tolist())
        rows.append((k, len(important & high_degree) / float(k)))
    return pd.DataFrame(rows, columns=['budget', 'overlap'])


def important_class_distribution(matrix, labels, num_classes, budgets, columns=False):
    """ Class histogram of the top-k most important nodes per budget

    The last row (`budget` == 'global') holds the class distribution of all nodes.
    """
    labels = np.asarray(labels, dtype=np.int64)
    _check_budgets(budgets, len(labels))
    importance = _importance_ranking(matrix, columns)
    classes = ['class_{}'.format(c) for c in range(num_classes)]

    def distribution(nodes):
        counts = np.bincount(labels[nodes], minlength=num_classes)
        return (counts / float(counts.sum())).tolist()

    rows = [[k] + distribution(tools.top_k(importance, k)) for k in budgets]
    rows.append(['global'] + distribution(np.arange(len(labels))))
    return pd.DataFrame(rows, columns=['budget'] + classes)
