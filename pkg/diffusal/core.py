""" Seeded active-learning experiments: dataset preparation, splits and the acquisition loop """

import collections
import functools
import logging
import multiprocessing
import time

import numpy as np
import tqdm

from . import cache
from . import clustering
from . import diffusion
from . import graph
from . import model as qbc
from . import results
from . import strategy
from . import tools
from .tools import ConfigError

from .commands import shared

log = logging.getLogger(__name__)

ExperimentConfig = collections.namedtuple('ExperimentConfig', (
    'dataset', 'strategy', 'diffusion', 'model', 'seeds', 'val_size', 'budget_max_multiple',
    'step_multiple', 'two_hop', 'cache_dir', 'kmeans_restarts', 'dump_dir'))
ExperimentConfig.__new__.__defaults__ = (
    None, strategy.StrategyConfig(), diffusion.DiffusionConfig(), qbc.QBCConfig(), (0,), 500, 20,
    2, False, None, 1, None)

Prepared = collections.namedtuple('Prepared', ('dataset', 'diffusion', 'features', 'importance'))

RUN_ERRORS = (clustering.ClusteringError, diffusion.DiffusionError, qbc.ModelError,
              strategy.SelectionError)


class ExperimentFailed(Exception):
    """ A run aborted part way; `results` holds the budgets evaluated before the failure """

    def __init__(self, message, results=()):
        super(ExperimentFailed, self).__init__(message, list(results))
        self.message = message
        self.results = list(results)

    def __str__(self):
        return self.message


def validate_experiment_config(config):
    if config.dataset is None:
        raise ConfigError('no dataset given')
    if not config.seeds:
        raise ConfigError('seeds must not be empty')
    if config.val_size < 0:
        raise ConfigError('val_size must not be negative')
    if config.step_multiple < 1:
        raise ConfigError('step_multiple must be at least 1')
    if config.budget_max_multiple < config.step_multiple or \
            config.budget_max_multiple % config.step_multiple:
        raise ConfigError(
            'budget_max_multiple ({}) must be a multiple of step_multiple ({})'.format(
                config.budget_max_multiple, config.step_multiple))
    if config.kmeans_restarts < 1:
        raise ConfigError('kmeans_restarts must be at least 1')
    strategy.validate_strategy_config(config.strategy)
    qbc.validate_qbc_config(config.model)
    return config._replace(diffusion=diffusion.validate_diffusion_config(config.diffusion),
                           seeds=tuple(config.seeds))


def config_metadata(config):
    """ JSON-friendly description of a configuration, stored with the results """
    return dict(dataset=config.dataset,
                strategy=dict(config.strategy._asdict()),
                diffusion=dict(alphas=list(config.diffusion.alphas),
                               epsilon=config.diffusion.epsilon),
                model=dict(config.model._asdict()),
                seeds=list(config.seeds),
                val_size=config.val_size,
                budget_max_multiple=config.budget_max_multiple,
                step_multiple=config.step_multiple,
                two_hop=config.two_hop,
                kmeans_restarts=config.kmeans_restarts,
                test_split=results.TEST_SPLIT_CONVENTION)


class Splits(collections.namedtuple('Splits', ('candidates', 'validation'))):
    """ Selection candidates and the validation set; the test set depends on the labeled pool """

    def test_nodes(self, labeled):
        excluded = set(labeled)
        return [node for node in self.candidates if node not in excluded]


def make_splits(dataset, seed, val_size):
    if val_size >= dataset.n:
        raise ConfigError('val_size ({}) must be below the node count ({})'.format(
            val_size, dataset.n))
    rng = tools.make_rng(seed, 2)
    validation = sorted(int(v) for v in rng.choice(dataset.n, size=val_size, replace=False))
    excluded = set(validation)
    candidates = [node for node in range(dataset.n) if node not in excluded]
    return Splits(candidates, validation)


def effective_val_size(config, n, num_classes):
    """ The configured val_size, shrunk to n // 4 when it leaves too few nodes for the budget """
    budget_max = config.budget_max_multiple * num_classes
    if config.val_size < n - budget_max:
        return config.val_size
    shrunk = n // 4
    if shrunk >= n - budget_max:
        raise ConfigError('{} nodes are too few for a budget of {}'.format(n, budget_max))
    log.warning('val_size {} leaves too few nodes for a budget of {}, using {}'.format(
        config.val_size, budget_max, shrunk))
    return shrunk


def budget_grid(config, num_classes):
    """ Labeled pool sizes at which the model is evaluated; an explicit batch_size sets the step """
    step = config.strategy.batch_size or config.step_multiple * num_classes
    budget_max = config.budget_max_multiple * num_classes
    if budget_max % step:
        raise ConfigError('budget {} is not a multiple of the batch size {}'.format(
            budget_max, step))
    return list(range(step, budget_max + 1, step))


def _diffusion_for(dataset, config, parallel=False, progress=False):
    store = cache.MatrixStore(config.cache_dir) if config.cache_dir else None
    key = cache.diffusion_key(dataset.name, config.diffusion.alphas, config.diffusion.epsilon,
                              two_hop=config.two_hop)
    if store is not None:
        matrix = store.get(key)
        if matrix is not None and matrix.shape[0] == dataset.n:
            log.info("Using cached diffusion matrix '{}'".format(key))
            return matrix

    if config.two_hop:
        with shared.log_duration('Computing 2-hop matrix...'):
            matrix = diffusion.two_hop_matrix(dataset.graph)
        header = dict(name=dataset.name, two_hop=True)
    else:
        with shared.log_duration('Computing diffusion matrix for {} nodes...'.format(dataset.n),
                                 level=logging.INFO):
            matrix = diffusion.diffusion_matrix(dataset.graph, config.diffusion,
                                                parallel=parallel, progress=progress)
        header = dict(name=dataset.name, alphas=list(config.diffusion.alphas),
                      epsilon=config.diffusion.epsilon)
    if store is not None:
        store.set(key, matrix, header)
    return matrix


def prepare(config, parallel=False, progress=False):
    """ load -> largest connected component -> normalize -> diffuse -> propagate -> importance """
    dataset = graph.largest_connected_component(graph.load_dataset(config.dataset)).normalized()
    matrix = _diffusion_for(dataset, config, parallel=parallel, progress=progress)
    features = diffusion.propagate_features(matrix, dataset.features)
    # The 2-hop matrix is symmetric, its influence is read from the columns
    importance = diffusion.importance_scores(matrix, columns=config.two_hop)
    return Prepared(dataset, matrix, features, importance)


def _round_seed(config, seed, round_index):
    sequence = np.random.SeedSequence([config.model.seed, seed, round_index])
    return int(sequence.generate_state(1)[0])


def _initial_pool(config, prepared, splits, step, seed, rng):
    if config.strategy.kind != 'diffusal':
        # Baselines start from a random pool without class balancing
        return strategy.select_random(splits.candidates, step, rng), None
    with shared.log_duration('Clustering diffused features (k={})...'.format(step)):
        clusters = clustering.kmeans(prepared.features, step, seed,
                                     restarts=config.kmeans_restarts)
    pool = clustering.initial_pool(clusters, prepared.features, step, exclude=splits.validation)
    return pool, clusters


def generate_run(config, seed, prepared, record=None):
    """ Yield one RunResult per budget for a single seed

    Args:
        config (ExperimentConfig): validated configuration
        seed: run seed (splits, initial pool, model initialization)
        prepared (Prepared): output of `prepare`
        record: optional dict filled with the run's debug details

    Yields:
        RunResult for budgets step, 2 step, ..., budget_max
    """
    dataset = prepared.dataset
    num_classes = dataset.num_classes
    budgets = budget_grid(config, num_classes)
    step = budgets[0]
    val_size = effective_val_size(config, dataset.n, num_classes)
    splits = make_splits(dataset, seed, val_size)
    label = strategy.strategy_label(config.strategy, config.model.members, config.two_hop)
    rng = tools.make_rng(seed)

    start = time.monotonic()
    labeled, clusters = _initial_pool(config, prepared, splits, step, seed, rng)
    acquisition_time = time.monotonic() - start

    if record is not None:
        record.update(dataset=dataset.name, strategy=label, seed=seed, val_size=val_size,
                      candidates=len(splits.candidates), initial_pool=list(labeled),
                      clusters=None if clusters is None else clusters.assignments,
                      rounds=[])

    for round_index, budget in enumerate(budgets):
        if len(labeled) != budget or len(set(labeled)) != budget:
            raise ExperimentFailed('labeled pool has {} nodes at budget {}'.format(
                len(set(labeled)), budget))

        start = time.monotonic()
        model = qbc.init_model(config.model._replace(seed=_round_seed(config, seed, round_index)),
                               dataset.num_features, num_classes)
        report = qbc.train_full(model, prepared.features, dataset.labels, labeled,
                                splits.validation)
        training_time = time.monotonic() - start

        test_nodes = splits.test_nodes(labeled)
        test_accuracy = qbc.accuracy(model, prepared.features, dataset.labels, test_nodes)
        log.info('{} seed {} budget {}: test accuracy {:.4f} ({} epochs)'.format(
            label, seed, budget, test_accuracy, report.epochs_run))
        yield results.RunResult(dataset.name, label, seed, budget, test_accuracy,
                                acquisition_time, training_time)

        if record is not None:
            record['rounds'].append(dict(budget=budget, test_size=len(test_nodes),
                                         test_accuracy=test_accuracy,
                                         epochs_run=report.epochs_run))
        if budget == budgets[-1]:
            break

        start = time.monotonic()
        state = strategy.SelectionState(
            prepared.features, dataset.labels, labeled, splits.candidates, config.strategy,
            model=model, clusters=clusters, importance=prepared.importance,
            graph=dataset.graph, rng=rng)
        picks = strategy.select_batch(state, step)
        labeled = state.labeled
        acquisition_time = time.monotonic() - start

        if record is not None:
            record['rounds'][-1].update(
                selected=picks, breakdowns=[b._asdict() for b in state.breakdowns])


def run_experiment(config, seed, prepared=None, record=None):
    """ All budgets of one seeded run; a failed round raises ExperimentFailed with the rest """
    config = validate_experiment_config(config)
    if prepared is None:
        prepared = prepare(config)
    collected = []
    try:
        for result in generate_run(config, seed, prepared, record=record):
            collected.append(result)
    except RUN_ERRORS as e:
        raise ExperimentFailed('seed {} failed after {} budgets: {}'.format(
            seed, len(collected), e), collected)
    except ExperimentFailed as e:
        raise ExperimentFailed(e.message, collected)
    return collected


def run_ablation_2hop(config, seed, prepared=None):
    """ run_experiment with the 2-hop matrix replacing diffusion everywhere """
    return run_experiment(config._replace(two_hop=True), seed, prepared=prepared)


def _run_seed(config, prepared, seed):
    record = {} if config.dump_dir else None
    run_results = run_experiment(config, seed, prepared=prepared, record=record)
    if record is not None:
        results.write_dump(config.dump_dir, record['dataset'], record['strategy'], seed, record)
    return seed, run_results


def run_sweep(config, skip=(), parallel=False, progress=False):
    """ Run every configured seed, yielding (seed, results) as each run completes

    Args:
        config (ExperimentConfig): sweep configuration
        skip: (dataset, strategy, seed) keys already completed
        parallel (boolean): run seeds in a process pool
        progress (boolean): show a progress bar over seeds
    """
    config = validate_experiment_config(config)
    with shared.log_duration('Preparing dataset...', level=logging.INFO):
        prepared = prepare(config, parallel=parallel, progress=progress)
    label = strategy.strategy_label(config.strategy, config.model.members, config.two_hop)

    seeds = [seed for seed in config.seeds if (prepared.dataset.name, label, seed) not in skip]
    if len(seeds) < len(config.seeds):
        log.info('Skipping {} completed seeds'.format(len(config.seeds) - len(seeds)))

    run = functools.partial(_run_seed, config, prepared)
    if parallel and len(seeds) > 1:
        pool = multiprocessing.Pool()
        imap_processor = pool.imap
    else:
        pool = None
        imap_processor = map

    try:
        for seed, run_results in tqdm.tqdm(imap_processor(run, seeds), total=len(seeds),
                                           unit='seed', disable=not progress):
            yield seed, run_results
    finally:
        if pool is not None:
            pool.close()
            pool.join()
