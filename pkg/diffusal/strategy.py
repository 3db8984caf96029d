""" Acquisition: the combined utility score, within-batch selection and baseline strategies """

import collections
import logging

import numpy as np
from sklearn.metrics import pairwise_distances

from . import clustering
from . import model as qbc
from . import tools
from .tools import ConfigError

log = logging.getLogger(__name__)

KINDS = ('diffusal', 'random', 'entropy', 'degree', 'coreset')
COMBINE_MODES = ('multiplicative', 'additive')

StrategyConfig = collections.namedtuple('StrategyConfig', (
    'kind', 'use_unc', 'use_div', 'use_imp', 'combine', 'batch_size'))
StrategyConfig.__new__.__defaults__ = ('diffusal', True, True, True, 'multiplicative', None)

ScoreBreakdown = collections.namedtuple('ScoreBreakdown',
                                        ('node', 'unc', 'div', 'imp', 'combined'))


class SelectionError(Exception):
    pass


def validate_strategy_config(config):
    if config.kind not in KINDS:
        raise ConfigError('unknown strategy {!r}, expected one of {}'.format(
            config.kind, ', '.join(KINDS)))
    if config.combine not in COMBINE_MODES:
        raise ConfigError('unknown combine mode {!r}'.format(config.combine))
    if config.kind == 'diffusal' and not (config.use_unc or config.use_div or config.use_imp):
        raise ConfigError('diffusal needs at least one of uncertainty, diversity, importance')
    if config.batch_size is not None and config.batch_size < 1:
        raise ConfigError('batch_size must be positive, got {}'.format(config.batch_size))
    return config


def strategy_label(config, members=None, two_hop=False):
    """ Name used in result files, e.g. `diffusal-no-div-additive` or `coreset-2hop` """
    parts = [config.kind]
    if config.kind == 'diffusal':
        parts.extend('no-' + name for name, used in (('unc', config.use_unc),
                                                     ('div', config.use_div),
                                                     ('imp', config.use_imp)) if not used)
        if config.combine == 'additive':
            parts.append('additive')
    if members == 1:
        parts.append('mlp')
    if two_hop:
        parts.append('2hop')
    return '-'.join(parts)


def combine_scores(unc, div, imp, config):
    """ Product (or sum) of the enabled score vectors; disabled ones are ignored """
    enabled = [np.asarray(scores, dtype=np.float64)
               for scores, used in ((unc, config.use_unc), (div, config.use_div),
                                    (imp, config.use_imp)) if used]
    if not enabled:
        raise SelectionError('all score components are disabled')
    if any(len(scores) != len(enabled[0]) for scores in enabled):
        raise SelectionError('score vectors differ in length')

    multiplicative = config.combine == 'multiplicative'
    combined = np.full(len(enabled[0]), 1.0 if multiplicative else 0.0)
    for scores in enabled:
        combined = combined * scores if multiplicative else combined + scores
    return combined


class SelectionState(object):
    """ The labeled pool plus everything selection needs

    Labels are revealed (the simulated oracle) only through `reveal`; `labeled` keeps the
    acquisition order.
    """

    def __init__(self, features, labels, labeled, candidates, config, model=None, clusters=None,
                 importance=None, graph=None, rng=None):
        self.features = features
        self.labels = labels
        self.labeled = list(labeled)
        self.unlabeled = set(int(c) for c in candidates) - set(self.labeled)
        self.config = config
        self.model = model
        self.clusters = clusters
        self.importance = importance
        self.graph = graph
        self.rng = rng
        self.breakdowns = []

    def unlabeled_nodes(self):
        return np.asarray(sorted(self.unlabeled), dtype=np.int64)

    def reveal(self, node):
        node = int(node)
        if node not in self.unlabeled:
            raise SelectionError('node {} is not an unlabeled candidate'.format(node))
        self.unlabeled.remove(node)
        self.labeled.append(node)
        return self.labels[node]

    def _check_budget(self, b):
        if b > len(self.unlabeled):
            raise SelectionError('cannot select {} nodes from {} candidates'.format(
                b, len(self.unlabeled)))

    def _train_step(self):
        qbc.train_one_epoch(self.model, self.features, self.labels, self.labeled)


def select_batch_diffusal(state, b):
    """ Pick b nodes one at a time by combined utility, training one epoch after each pick """
    state._check_budget(b)
    config = state.config
    picks = []
    for _ in range(b):
        nodes = state.unlabeled_nodes()
        unc = qbc.uncertainty_scores(state.model, state.features, nodes) if config.use_unc \
            else None
        div = clustering.diversity_scores(state.clusters, state.labeled)[nodes] \
            if config.use_div else None
        imp = state.importance[nodes] if config.use_imp else None

        combined = combine_scores(unc, div, imp, config)
        if not np.any(combined > 0) and config.use_unc and (config.use_div or config.use_imp):
            # All-zero utilities (e.g. every entropy is exactly 0): rank by div * imp instead
            combined = combine_scores(None, div, imp, config._replace(use_unc=False))

        index = int(np.argmax(combined))
        node = int(nodes[index])
        breakdown = ScoreBreakdown(
            node,
            float(unc[index]) if unc is not None else None,
            float(div[index]) if div is not None else None,
            float(imp[index]) if imp is not None else None,
            float(combined[index]))
        log.debug('Selected {}'.format(breakdown))
        state.breakdowns.append(breakdown)
        state.reveal(node)
        picks.append(node)
        state._train_step()
    return picks


def select_random(unlabeled, b, rng):
    nodes = np.asarray(sorted(unlabeled), dtype=np.int64)
    if b > len(nodes):
        raise SelectionError('cannot select {} nodes from {} candidates'.format(b, len(nodes)))
    return [int(node) for node in rng.choice(nodes, size=b, replace=False)]


def select_entropy(state, b):
    """ Highest raw entropy first, with the same one-epoch update after every pick """
    state._check_budget(b)
    picks = []
    for _ in range(b):
        nodes = state.unlabeled_nodes()
        scores = qbc.entropy(state.model.forward(state.features[nodes]))
        node = tools.argmax_smallest_id(scores, nodes)
        state.reveal(node)
        picks.append(node)
        state._train_step()
    return picks


def select_degree(graph, unlabeled, b):
    if b > len(unlabeled):
        raise SelectionError('cannot select {} nodes from {} candidates'.format(
            b, len(unlabeled)))
    return [int(node) for node in tools.top_k(graph.degrees, b, unlabeled)]


def select_coreset(latents, labeled, unlabeled, b):
    """ Greedy k-center: repeatedly take the node farthest from the labeled-plus-chosen set """
    nodes = np.asarray(sorted(unlabeled), dtype=np.int64)
    if b > len(nodes):
        raise SelectionError('cannot select {} nodes from {} candidates'.format(b, len(nodes)))
    labeled = list(labeled)
    if labeled:
        min_distances = pairwise_distances(latents[nodes], latents[labeled]).min(axis=1)
    else:
        min_distances = None

    picks = []
    for _ in range(b):
        # With nothing to measure against, start from the smallest id
        index = 0 if min_distances is None else int(np.argmax(min_distances))
        picks.append(int(nodes[index]))
        distances = pairwise_distances(latents[nodes], latents[[nodes[index]]]).ravel()
        min_distances = distances if min_distances is None else np.minimum(min_distances,
                                                                           distances)
        min_distances[index] = -np.inf
    return picks


def select_batch(state, b):
    """ Dispatch on the configured strategy kind; returns the b new nodes in selection order """
    kind = state.config.kind
    if kind == 'diffusal':
        return select_batch_diffusal(state, b)
    if kind == 'entropy':
        return select_entropy(state, b)

    if kind == 'random':
        picks = select_random(state.unlabeled, b, state.rng)
    elif kind == 'degree':
        picks = select_degree(state.graph, state.unlabeled, b)
    elif kind == 'coreset':
        picks = select_coreset(state.model.latent(state.features), state.labeled,
                               state.unlabeled, b)
    else:
        raise SelectionError('unknown strategy {!r}'.format(kind))
    for node in picks:
        state.reveal(node)
    return picks
