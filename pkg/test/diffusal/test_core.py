import os

import numpy as np
import pytest

from diffusal import core
from diffusal import graph
from diffusal import model as qbc
from diffusal import strategy
from diffusal.tools import ConfigError

FAST_MODEL = qbc.QBCConfig(members=3, hidden=8, max_epochs=30, patience=5)
BUDGETS = list(range(4, 41, 4))


@pytest.fixture
def config(two_blocks_dir):
    return core.ExperimentConfig(dataset=two_blocks_dir, model=FAST_MODEL, seeds=(0,))


@pytest.fixture
def prepared(config):
    return core.prepare(config)


def _config(config, kind='diffusal', **changes):
    return config._replace(strategy=strategy.StrategyConfig(kind=kind), **changes)


def test_make_splits(two_blocks):
    splits = core.make_splits(two_blocks, 3, 20)
    assert len(splits.validation) == 20
    assert len(splits.candidates) == 40
    assert not set(splits.validation) & set(splits.candidates)
    assert sorted(splits.validation + splits.candidates) == list(range(60))
    assert splits == core.make_splits(two_blocks, 3, 20)
    assert splits != core.make_splits(two_blocks, 4, 20)

    labeled = splits.candidates[:4]
    test_nodes = splits.test_nodes(labeled)
    assert len(test_nodes) == 36
    assert not set(test_nodes) & (set(labeled) | set(splits.validation))


def test_make_splits_rejects_oversized_validation(two_blocks):
    with pytest.raises(ConfigError):
        core.make_splits(two_blocks, 0, 60)


def test_effective_val_size_shrinks(config):
    assert core.effective_val_size(config, 60, 2) == 15
    assert core.effective_val_size(config._replace(val_size=10), 60, 2) == 10
    with pytest.raises(ConfigError, match='too few'):
        core.effective_val_size(config, 40, 2)


def test_budget_grid(config):
    assert core.budget_grid(config, 2) == BUDGETS
    assert core.budget_grid(config, 7) == list(range(14, 141, 14))
    batched = config._replace(strategy=strategy.StrategyConfig(batch_size=8))
    assert core.budget_grid(batched, 2) == [8, 16, 24, 32, 40]
    with pytest.raises(ConfigError):
        core.budget_grid(config._replace(strategy=strategy.StrategyConfig(batch_size=6)), 2)


@pytest.mark.parametrize('changes', [
    dict(seeds=()),
    dict(dataset=None),
    dict(budget_max_multiple=5),
    dict(step_multiple=0),
    dict(kmeans_restarts=0),
    dict(val_size=-1),
])
def test_invalid_experiment_config(config, changes):
    with pytest.raises(ConfigError):
        core.validate_experiment_config(config._replace(**changes))


def test_prepare(prepared):
    assert prepared.dataset.n == 60
    assert prepared.features.shape == (60, 6)
    assert prepared.diffusion.shape == (60, 60)
    assert prepared.importance.sum() == pytest.approx(1.0)
    assert np.allclose(prepared.dataset.features.sum(axis=1), 1.0)


def test_prepare_uses_cache(config, tmpdir):
    cached = config._replace(cache_dir=str(tmpdir))
    first = core.prepare(cached)
    assert any(name.endswith('.npz') for name in os.listdir(str(tmpdir)))
    second = core.prepare(cached)
    assert (first.diffusion != second.diffusion).nnz == 0
    assert np.array_equal(first.features, second.features)


def test_prepare_caches_two_hop_separately(config, tmpdir, monkeypatch):
    core.prepare(config._replace(cache_dir=str(tmpdir)))
    two_hop = config._replace(cache_dir=str(tmpdir), two_hop=True)
    first = core.prepare(two_hop)
    assert len([name for name in os.listdir(str(tmpdir)) if name.endswith('.npz')]) == 2

    def recompute(graph):
        raise AssertionError('2-hop matrix recomputed')
    monkeypatch.setattr(core.diffusion, 'two_hop_matrix', recompute)
    second = core.prepare(two_hop)
    assert (first.diffusion != second.diffusion).nnz == 0


@pytest.mark.parametrize('kind', strategy.KINDS)
def test_protocol_invariants(config, prepared, kind):
    record = {}
    results = core.run_experiment(_config(config, kind), 0, prepared=prepared, record=record)
    assert [r.budget for r in results] == BUDGETS
    assert all(0 <= r.test_accuracy <= 1 for r in results)
    assert all(r.acquisition_time_s >= 0 and r.training_time_s >= 0 for r in results)
    assert {r.strategy for r in results} == {kind}
    assert {r.dataset for r in results} == {'two-blocks'}

    assert record['val_size'] == 15
    assert len(record['initial_pool']) == 4
    labeled = list(record['initial_pool'])
    for round_record in record['rounds'][:-1]:
        labeled.extend(round_record['selected'])
    assert len(labeled) == len(set(labeled)) == 40
    splits = core.make_splits(prepared.dataset, 0, 15)
    assert not set(labeled) & set(splits.validation)
    assert [r['test_size'] for r in record['rounds']] == [45 - b for b in BUDGETS]


@pytest.mark.parametrize('kind', ['random', 'diffusal'])
def test_replay_is_deterministic(config, prepared, kind):
    first = core.run_experiment(_config(config, kind), 1, prepared=prepared)
    second = core.run_experiment(_config(config, kind), 1, prepared=prepared)
    assert [(r.budget, r.test_accuracy) for r in first] == \
        [(r.budget, r.test_accuracy) for r in second]


def test_diffusal_records_score_breakdowns(config, prepared):
    record = {}
    core.run_experiment(config, 0, prepared=prepared, record=record)
    first_round = record['rounds'][0]
    assert len(first_round['breakdowns']) == 4
    assert [b['node'] for b in first_round['breakdowns']] == first_round['selected']
    assert len(record['clusters']) == 60


def test_initial_pool_is_clustered_for_diffusal_only(config, prepared):
    diffusal_record, random_record = {}, {}
    core.run_experiment(config, 0, prepared=prepared, record=diffusal_record)
    core.run_experiment(_config(config, 'random'), 0, prepared=prepared, record=random_record)
    assert diffusal_record['clusters'] is not None
    assert random_record['clusters'] is None


def test_ablation_2hop(config):
    results = core.run_ablation_2hop(config, 0)
    assert [r.budget for r in results] == BUDGETS
    assert {r.strategy for r in results} == {'diffusal-2hop'}


def _final_budget_mean(sweep_config):
    final = [run_results[-1] for _, run_results in core.run_sweep(sweep_config)]
    assert {r.budget for r in final} == {BUDGETS[-1]}
    return 100 * np.mean([r.test_accuracy for r in final])


def test_two_hop_is_not_better_than_diffusion(config):
    # Class signal sits on four nodes, so most nodes only see it through long walks
    sweep_config = config._replace(model=qbc.QBCConfig(), seeds=tuple(range(10)))
    diffused = _final_budget_mean(sweep_config)
    two_hop = _final_budget_mean(sweep_config._replace(two_hop=True))
    assert two_hop <= diffused + 0.5


def test_run_sweep_skip_keys_carry_the_2hop_label(config):
    sweep = core.run_sweep(_config(config, 'random', seeds=(0, 1), two_hop=True),
                           skip={('two-blocks', 'random', 0), ('two-blocks', 'random-2hop', 1)})
    assert [seed for seed, _ in sweep] == [0]


def test_failed_round_keeps_partial_results(config, prepared, monkeypatch):
    def fail(state, b):
        raise strategy.SelectionError('no candidates')
    monkeypatch.setattr(core.strategy, 'select_batch', fail)
    with pytest.raises(core.ExperimentFailed) as excinfo:
        core.run_experiment(config, 0, prepared=prepared)
    assert [r.budget for r in excinfo.value.results] == [4]
    assert 'no candidates' in str(excinfo.value)


def test_run_sweep_skips_completed_seeds(config):
    sweep = core.run_sweep(_config(config, 'random', seeds=(0, 1)),
                           skip={('two-blocks', 'random', 0)})
    assert [seed for seed, _ in sweep] == [1]


def test_run_sweep_writes_dumps(config, tmpdir):
    dump_dir = str(tmpdir.join('dumps'))
    runs = list(core.run_sweep(_config(config, 'degree', dump_dir=dump_dir)))
    assert len(runs) == 1
    assert os.listdir(dump_dir) == ['two-blocks-degree-0.json']


def test_run_sweep_in_parallel_matches_serial(config):
    sweep_config = _config(config, 'random', seeds=(0, 1))
    serial = dict(core.run_sweep(sweep_config))
    parallel = dict(core.run_sweep(sweep_config, parallel=True))
    for seed in (0, 1):
        assert [r.test_accuracy for r in serial[seed]] == \
            [r.test_accuracy for r in parallel[seed]]


def test_missing_dataset(config, tmpdir):
    with pytest.raises(graph.DatasetError):
        core.prepare(config._replace(dataset=str(tmpdir)))


def test_config_metadata(config):
    metadata = core.config_metadata(config)
    assert metadata['diffusion'] == dict(alphas=[0.05, 0.2], epsilon=1e-4)
    assert metadata['model']['members'] == 3
    assert 'test_split' in metadata
