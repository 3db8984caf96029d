import numpy as np
import pytest

from diffusal import clustering

PAIRS = np.array([[0., 0.], [0., 1.], [10., 0.], [10., 1.]])


def test_separated_pairs():
    model = clustering.kmeans(PAIRS, 2, seed=0, restarts=3)
    assert model.assignments[0] == model.assignments[1]
    assert model.assignments[2] == model.assignments[3]
    assert model.assignments[0] != model.assignments[2]
    centroids = sorted(map(tuple, model.centroids.tolist()))
    assert centroids == [(0.0, 0.5), (10.0, 0.5)]
    assert model.inertia == pytest.approx(1.0)


def test_k_equals_n():
    model = clustering.kmeans(PAIRS, 4, seed=1)
    assert sorted(model.assignments.tolist()) == [0, 1, 2, 3]
    assert model.inertia == 0.0


def test_single_cluster_is_the_mean():
    model = clustering.kmeans(PAIRS, 1, seed=2)
    assert model.assignments.tolist() == [0, 0, 0, 0]
    assert np.allclose(model.centroids[0], PAIRS.mean(axis=0))


def test_deterministic_per_seed():
    rng = np.random.default_rng(3)
    points = rng.normal(size=(50, 3))
    first = clustering.kmeans(points, 5, seed=11)
    second = clustering.kmeans(points, 5, seed=11)
    assert first.assignments.tolist() == second.assignments.tolist()
    assert np.array_equal(first.centroids, second.centroids)


def test_restarts_never_increase_inertia():
    rng = np.random.default_rng(4)
    points = rng.normal(size=(80, 2))
    single = clustering.kmeans(points, 6, seed=5)
    several = clustering.kmeans(points, 6, seed=5, restarts=5)
    assert several.inertia <= single.inertia


def test_centroids_are_member_means():
    rng = np.random.default_rng(6)
    points = rng.normal(size=(40, 2))
    model = clustering.kmeans(points, 4, seed=0)
    assert (model.assignments < 4).all()
    for c in range(4):
        members = points[model.assignments == c]
        if len(members):
            assert np.allclose(model.centroids[c], members.mean(axis=0))
    assert clustering.cluster_sizes(model).sum() == 40


@pytest.mark.parametrize('k', [0, -1, 5])
def test_invalid_k(k):
    with pytest.raises(clustering.ClusteringError):
        clustering.kmeans(PAIRS, k, seed=0)


def _clusters(assignments, k):
    assignments = np.asarray(assignments)
    return clustering.ClusterModel(k, assignments, np.zeros((k, 1)), 0.0)


def test_diversity_arithmetic():
    clusters = _clusters([0] * 4 + [1] * 6 + [0, 1], 2)
    scores = clustering.diversity_scores(clusters, range(10))
    assert scores[10] == pytest.approx(0.6, abs=1e-9)
    assert scores[11] == pytest.approx(0.4, abs=1e-9)


def test_diversity_all_labels_in_one_cluster():
    clusters = _clusters([0, 0, 1, 1, 2], 3)
    assert clustering.diversity_scores(clusters, [0, 1]).tolist() == [0, 0, 1, 1, 1]


def test_diversity_without_labels():
    clusters = _clusters([0, 1, 1], 2)
    assert clustering.diversity_scores(clusters, []).tolist() == [1, 1, 1]


def test_diversity_update_is_monotonic():
    clusters = _clusters([0, 0, 0, 1, 1, 2, 2], 3)
    before = clustering.diversity_scores(clusters, [0, 3])
    after = clustering.diversity_scores(clusters, [0, 3, 1])
    in_cluster = clusters.assignments == 0
    assert (after[in_cluster] < before[in_cluster]).all()
    assert (after[~in_cluster] >= before[~in_cluster]).all()
    assert clustering.labeled_counts(clusters, [0, 3, 1]).tolist() == [2, 1, 0]


def test_initial_pool_separated_pairs():
    model = clustering.kmeans(PAIRS, 2, seed=0, restarts=3)
    assert sorted(clustering.initial_pool(model, PAIRS, 2)) == [0, 2]


def test_initial_pool_respects_exclusions():
    model = clustering.kmeans(PAIRS, 2, seed=0, restarts=3)
    assert sorted(clustering.initial_pool(model, PAIRS, 2, exclude=[0])) == [1, 2]


def test_initial_pool_of_all_nodes():
    model = clustering.kmeans(PAIRS, 4, seed=0)
    assert sorted(clustering.initial_pool(model, PAIRS, 4)) == [0, 1, 2, 3]


def test_initial_pool_errors():
    model = clustering.kmeans(PAIRS, 2, seed=0)
    with pytest.raises(clustering.ClusteringError):
        clustering.initial_pool(model, PAIRS, 3)
    with pytest.raises(clustering.ClusteringError):
        clustering.initial_pool(model, PAIRS, 2, exclude=[0, 1, 2])


def test_reseeding_fills_every_cluster():
    # identical points: every assignment step puts all of them in cluster 0
    points = np.ones((3, 2))
    model = clustering.kmeans(points, 3, seed=0, max_iterations=5)
    assert sorted(model.assignments.tolist()) == [0, 1, 2]
    assert model.inertia == 0.0


def test_inertia_does_not_increase_across_iterations():
    rng = np.random.default_rng(7)
    points = rng.normal(size=(60, 2))
    inertias = [clustering.kmeans(points, 5, seed=3, max_iterations=t).inertia
                for t in range(1, 12)]
    for before, after in zip(inertias, inertias[1:]):
        assert after <= before + 1e-12
