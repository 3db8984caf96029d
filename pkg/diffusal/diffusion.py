""" Personalized PageRank diffusion, feature propagation and node importance

Matrix convention: column j of a diffusion matrix holds the PPR vector seeded at node j under
the column-stochastic transition matrix T = A D^-1, so entry (i, j) is the mass a walk from j
deposits on i and row sums measure a node's total influence.
"""

import collections
import functools
import logging
import multiprocessing

import numba
import numpy as np
import scipy.sparse as sp
import tqdm

from .tools import ConfigError

log = logging.getLogger(__name__)

DEFAULT_ALPHAS = (0.05, 0.2)
DEFAULT_EPSILON = 1e-4
MAX_EXACT_NODES = 200

DiffusionConfig = collections.namedtuple('DiffusionConfig', ('alphas', 'epsilon'))
DiffusionConfig.__new__.__defaults__ = (DEFAULT_ALPHAS, DEFAULT_EPSILON)


class DiffusionError(Exception):
    pass


def validate_diffusion_config(config):
    alphas = tuple(config.alphas)
    if not alphas:
        raise ConfigError('alphas must not be empty')
    if any(not 0 < a <= 1 for a in alphas):
        raise ConfigError('every alpha must lie in (0, 1], got {}'.format(alphas))
    if any(b <= a for a, b in zip(alphas, alphas[1:])):
        raise ConfigError('alphas must be strictly increasing, got {}'.format(alphas))
    if not config.epsilon > 0:
        raise ConfigError('epsilon must be positive, got {}'.format(config.epsilon))
    return config._replace(alphas=alphas)


class PushResult(collections.namedtuple('PushResult',
                                        ('indices', 'values', 'residual_mass', 'n'))):
    """ Sparse PPR estimate for one seed plus the total mass left in the residual """

    def toarray(self):
        dense = np.zeros(self.n)
        dense[self.indices] = self.values
        return dense


@numba.njit(cache=True)
def _push(seed, degrees, indptr, indices, alpha, epsilon):
    n = degrees.shape[0]
    estimate = np.zeros(n)
    residual = np.zeros(n)
    residual[seed] = 1.0

    # Synchronous sweeps: every node over the threshold pushes the residual it held at the
    # start of the sweep, so the result does not depend on node order.
    frontier = np.empty(n, dtype=np.int64)
    next_frontier = np.empty(n, dtype=np.int64)
    touched = np.zeros(n, dtype=np.bool_)
    active = np.empty(n, dtype=np.int64)
    pushed = np.empty(n)
    frontier[0] = seed
    size = 1

    while size > 0:
        count = 0
        for i in range(size):
            u = frontier[i]
            if residual[u] >= epsilon * degrees[u]:
                active[count] = u
                pushed[count] = residual[u]
                count += 1
        for i in range(count):
            u = active[i]
            estimate[u] += alpha * pushed[i]
            residual[u] = 0.0

        # Only nodes that received mass can cross the threshold in the next sweep
        next_size = 0
        for i in range(count):
            u = active[i]
            share = (1.0 - alpha) * pushed[i] / degrees[u]
            for k in range(indptr[u], indptr[u + 1]):
                v = indices[k]
                residual[v] += share
                if not touched[v]:
                    touched[v] = True
                    next_frontier[next_size] = v
                    next_size += 1
        for i in range(next_size):
            touched[next_frontier[i]] = False
        frontier, next_frontier = next_frontier, frontier
        size = next_size

    return estimate, residual


def _check_push_args(graph, seed, alpha, epsilon):
    if not 0 <= seed < graph.n:
        raise DiffusionError('seed {} out of range for {} nodes'.format(seed, graph.n))
    if not 0 < alpha <= 1:
        raise DiffusionError('alpha must lie in (0, 1], got {}'.format(alpha))
    if not epsilon > 0:
        raise DiffusionError('epsilon must be positive, got {}'.format(epsilon))
    if graph.degrees.min() < 1:
        raise DiffusionError('push requires every node to have degree >= 1')


def _push_column(indptr, indices, degrees, alpha, epsilon, seed):
    estimate, residual = _push(seed, degrees, indptr, indices, alpha, epsilon)
    nonzero = np.flatnonzero(estimate)
    return nonzero, estimate[nonzero], residual.sum()


def ppr_push_single(graph, seed, alpha, epsilon):
    """ Approximate PPR vector of one seed with the residual push algorithm

    Pushing stops once every residual r(u) < epsilon * deg(u). Estimates below epsilon are
    kept, so sum(estimate) + residual_mass == 1 up to float accumulation.
    """
    _check_push_args(graph, seed, alpha, epsilon)
    a = graph.adjacency
    indices, values, residual_mass = _push_column(
        a.indptr, a.indices, graph.degrees.astype(np.float64), float(alpha), float(epsilon),
        int(seed))
    return PushResult(indices, values, residual_mass, graph.n)


def ppr_matrix(graph, alpha, epsilon, parallel=False, progress=False):
    """ Approximate PPR matrix; column j is the push estimate seeded at node j

    Args:
        graph (Graph): connected graph
        alpha: restart probability in (0, 1]
        epsilon: push threshold
        parallel (boolean): push seeds in a process pool (column order is preserved)
        progress (boolean): show a progress bar over seeds

    Returns:
        n x n scipy CSR matrix
    """
    if graph.n == 0:
        raise DiffusionError('empty graph')
    _check_push_args(graph, 0, alpha, epsilon)
    a = graph.adjacency
    push = functools.partial(_push_column, a.indptr, a.indices,
                             graph.degrees.astype(np.float64), float(alpha), float(epsilon))

    if parallel:
        pool = multiprocessing.Pool()
        imap_processor = functools.partial(pool.imap, chunksize=max(1, graph.n // 64))
    else:
        pool = None
        imap_processor = map

    rows, cols, data = [], [], []
    residuals = np.zeros(graph.n)
    try:
        columns = imap_processor(push, range(graph.n))
        for seed, (indices, values, residual) in enumerate(
                tqdm.tqdm(columns, total=graph.n, unit='seed', disable=not progress)):
            rows.append(indices)
            cols.append(np.full(len(indices), seed, dtype=np.int64))
            data.append(values)
            residuals[seed] = residual
    finally:
        if pool is not None:
            pool.close()
            pool.join()

    matrix = sp.csc_matrix((np.concatenate(data), (np.concatenate(rows), np.concatenate(cols))),
                           shape=(graph.n, graph.n)).tocsr()
    matrix.sort_indices()
    log.debug('PPR alpha={} epsilon={}: {} nonzeros, max residual {:.3g}'.format(
        alpha, epsilon, matrix.nnz, residuals.max()))
    return matrix


def multiscale_sum(matrices):
    """ Entrywise sum of the per-scale diffusion matrices """
    if not matrices:
        raise DiffusionError('no matrices to sum')
    shape = matrices[0].shape
    total = sp.csr_matrix(shape)
    for matrix in matrices:
        if matrix.shape != shape:
            raise DiffusionError('dimension mismatch: {} vs {}'.format(matrix.shape, shape))
        total = total + sp.csr_matrix(matrix)
    total.sort_indices()
    return total


def diffusion_matrix(graph, config, parallel=False, progress=False):
    """ Multi-scale PPR matrix, one scale per alpha in the config """
    config = validate_diffusion_config(config)
    return multiscale_sum([ppr_matrix(graph, alpha, config.epsilon, parallel=parallel,
                                      progress=progress)
                           for alpha in config.alphas])


def propagate_features(diffusion, features):
    """ Diffused features P X as a dense array """
    if diffusion.shape[1] != features.shape[0]:
        raise DiffusionError('dimension mismatch: P is {}, X is {}'.format(
            diffusion.shape, features.shape))
    propagated = diffusion @ features
    if sp.issparse(propagated):
        propagated = propagated.toarray()
    return np.asarray(propagated, dtype=np.float64)


def importance_scores(diffusion, columns=False):
    """ Row sums of the diffusion matrix (column sums if `columns`), L1-normalized """
    raw = np.asarray(diffusion.sum(axis=0 if columns else 1), dtype=np.float64).ravel()
    total = raw.sum()
    if total <= 0:
        return np.full(len(raw), 1.0 / len(raw))
    return raw / total


def two_hop_matrix(graph):
    """ (D^-1/2 (A + I) D^-1/2)^2, the 2-hop stand-in for the diffusion matrix """
    a_hat = graph.adjacency + sp.identity(graph.n, format='csr')
    d_inv_sqrt = sp.diags(1.0 / np.sqrt(np.asarray(a_hat.sum(axis=1)).ravel()))
    normalized = (d_inv_sqrt @ a_hat @ d_inv_sqrt).tocsr()
    squared = (normalized @ normalized).tocsr()
    squared.sort_indices()
    return squared


def transition_matrix(graph):
    """ Column-stochastic random walk matrix T = A D^-1 """
    return (graph.adjacency @ sp.diags(1.0 / graph.degrees)).tocsr()


def exact_ppr_matrix(graph, alpha):
    """ Dense alpha (I - (1 - alpha) T)^-1, the closed form of the PPR power series """
    if graph.n > MAX_EXACT_NODES:
        raise DiffusionError('exact PPR is limited to {} nodes'.format(MAX_EXACT_NODES))
    inner = np.identity(graph.n) - (1 - alpha) * transition_matrix(graph).toarray()
    return alpha * np.linalg.inv(inner)
