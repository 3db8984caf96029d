""" k-means on diffused features: diversity scores and initial pool selection """

import collections
import logging

import numpy as np
from sklearn.metrics.pairwise import euclidean_distances

from . import tools

log = logging.getLogger(__name__)

MAX_ITERATIONS = 300

ClusterModel = collections.namedtuple('ClusterModel',
                                      ('k', 'assignments', 'centroids', 'inertia'))


class ClusteringError(Exception):
    pass


def _kmeans_plus_plus(features, k, rng):
    n = features.shape[0]
    centers = [int(rng.integers(n))]
    closest = euclidean_distances(features, features[centers], squared=True).ravel()
    for _ in range(1, k):
        total = closest.sum()
        if total > 0:
            candidate = int(rng.choice(n, p=closest / total))
        else:
            # Every point coincides with a center already
            candidate = int(rng.choice(np.setdiff1d(np.arange(n), centers)))
        centers.append(candidate)
        closest = np.minimum(closest, euclidean_distances(
            features, features[[candidate]], squared=True).ravel())
    return features[centers].astype(np.float64)


def _inertia(features, centroids, assignments):
    return float(((features - centroids[assignments]) ** 2).sum())


def _lloyd(features, centroids, max_iterations):
    k = centroids.shape[0]
    assignments = None
    for iteration in range(max_iterations):
        new_assignments = euclidean_distances(features, centroids, squared=True).argmin(axis=1)
        if assignments is not None and np.array_equal(new_assignments, assignments):
            break
        assignments = new_assignments

        for c in range(k):
            members = assignments == c
            if members.any():
                centroids[c] = features[members].mean(axis=0)

        empty = np.setdiff1d(np.arange(k), assignments)
        while len(empty):
            # Re-seed with the point farthest from its centroid, taken from a cluster that keeps
            # at least one member; k <= n guarantees such a cluster exists
            sizes = np.bincount(assignments, minlength=k)
            distances = ((features - centroids[assignments]) ** 2).sum(axis=1)
            distances[sizes[assignments] < 2] = -np.inf
            farthest = int(np.argmax(distances))
            centroids[empty[0]] = features[farthest]
            assignments[farthest] = empty[0]
            empty = np.setdiff1d(np.arange(k), assignments)
        log.debug('k-means iteration {}: inertia {:.6g}'.format(
            iteration, _inertia(features, centroids, assignments)))
    return assignments, centroids


def kmeans(features, k, seed, restarts=1, max_iterations=MAX_ITERATIONS):
    """ Lloyd's algorithm with k-means++ initialization

    Args:
        features: n x d dense matrix (the diffused features)
        k: cluster count, 1 <= k <= n
        seed: rng seed, the result is deterministic given (features, k, seed)
        restarts: independent initializations, the lowest inertia wins
        max_iterations: Lloyd iteration cap

    Returns:
        ClusterModel
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    if k <= 0:
        raise ClusteringError('k must be positive, got {}'.format(k))
    if k > n:
        raise ClusteringError('k={} exceeds the number of points ({})'.format(k, n))

    rng = tools.make_rng(seed)
    best = None
    for _ in range(max(1, restarts)):
        centroids = _kmeans_plus_plus(features, k, rng)
        assignments, centroids = _lloyd(features, centroids, max_iterations)
        model = ClusterModel(k, assignments, centroids,
                             _inertia(features, centroids, assignments))
        if best is None or model.inertia < best.inertia:
            best = model
    log.debug('k-means with k={}: inertia {:.6g}'.format(k, best.inertia))
    return best


def labeled_counts(clusters, labeled):
    labeled = np.asarray(list(labeled), dtype=np.int64)
    return np.bincount(clusters.assignments[labeled], minlength=clusters.k)


def diversity_scores(clusters, labeled):
    """ 1 - (labeled nodes in the node's cluster) / (labeled nodes); all ones when none labeled """
    labeled = list(labeled)
    if not labeled:
        return np.ones(len(clusters.assignments))
    counts = labeled_counts(clusters, labeled)
    return 1.0 - counts[clusters.assignments] / float(len(labeled))


def initial_pool(clusters, features, size, exclude=()):
    """ For each centroid in index order, the closest node not yet chosen

    Args:
        clusters (ClusterModel): clustering with k == size
        features: the features the clustering was built on
        size: pool size
        exclude: nodes that may not be chosen (e.g. the validation set)

    Returns:
        list of `size` distinct nodes, ties resolved by the smaller node id
    """
    features = np.asarray(features, dtype=np.float64)
    n = features.shape[0]
    if size > n - len(exclude):
        raise ClusteringError('pool size {} exceeds the {} available nodes'.format(
            size, n - len(exclude)))
    if clusters.k != size:
        raise ClusteringError('clustering has k={} but a pool of {} was requested'.format(
            clusters.k, size))

    available = np.ones(n, dtype=bool)
    available[list(exclude)] = False
    pool = []
    for centroid in clusters.centroids:
        distances = np.linalg.norm(features - centroid, axis=1)
        distances[~available] = np.inf
        node = int(np.argmin(distances))
        pool.append(node)
        available[node] = False
    return pool


def cluster_sizes(clusters):
    return np.bincount(clusters.assignments, minlength=clusters.k)
