""" Graph datasets: loading, validation, largest connected component, feature normalization """

import json
import logging
import os

import numpy as np
import scipy.sparse as sp
from scipy.sparse import csgraph
from sklearn import preprocessing

log = logging.getLogger(__name__)

EDGES_FILE = 'graph.edges'
FEATURES_FILE = 'features.csv'
LABELS_FILE = 'labels.csv'
META_FILE = 'meta.json'


class DatasetError(Exception):
    pass


def _parse_error(path, lineno, message):
    return DatasetError('{}:{}: {}'.format(os.path.basename(path), lineno, message))


class Graph(object):
    """ Undirected, unweighted graph stored as a symmetric CSR adjacency matrix """

    def __init__(self, adjacency):
        adjacency = sp.csr_matrix(adjacency, dtype=np.float64)
        if adjacency.shape[0] != adjacency.shape[1]:
            raise DatasetError('Adjacency matrix must be square, got {}'.format(adjacency.shape))
        adjacency = adjacency.maximum(adjacency.T).tolil()
        adjacency.setdiag(0)
        adjacency = adjacency.tocsr()
        adjacency.eliminate_zeros()
        adjacency.data[:] = 1.0
        adjacency.sort_indices()
        self._adjacency = adjacency
        self._degrees = np.diff(adjacency.indptr).astype(np.int64)

    @classmethod
    def from_edges(cls, edges, n):
        edges = np.asarray(edges, dtype=np.int64).reshape(-1, 2)
        edges = edges[edges[:, 0] != edges[:, 1]]
        data = np.ones(len(edges))
        return cls(sp.coo_matrix((data, (edges[:, 0], edges[:, 1])), shape=(n, n)))

    @property
    def adjacency(self):
        return self._adjacency

    @property
    def degrees(self):
        return self._degrees

    @property
    def n(self):
        return self._adjacency.shape[0]

    @property
    def num_edges(self):
        return self._adjacency.nnz // 2

    def edges(self):
        """ Edge list with u < v """
        upper = sp.triu(self._adjacency, k=1).tocoo()
        return np.column_stack((upper.row, upper.col))

    def neighbors(self, node):
        a = self._adjacency
        return a.indices[a.indptr[node]:a.indptr[node + 1]]

    def components(self):
        return csgraph.connected_components(self._adjacency, directed=False)

    def is_connected(self):
        if self.n == 0:
            return False
        return self.components()[0] == 1

    def subgraph(self, nodes):
        nodes = np.asarray(nodes, dtype=np.int64)
        return Graph(self._adjacency[nodes][:, nodes])


class Dataset(object):
    def __init__(self, name, graph, features, labels, num_classes, node_ids=None, id_map=None,
                 report=()):
        """ Create a Dataset

        Args:
            name: identifier used in results
            graph (Graph): the (possibly pre-LCC) graph
            features: n x d nonnegative matrix, numpy array or scipy sparse
            labels: class index per node
            num_classes: class count C
            node_ids: original file id of each node (default 0..n-1)
            id_map: old -> new node index map set by LCC extraction
            report: validation warnings collected so far
        """
        self.name = name
        self.graph = graph
        self.features = features
        self.labels = np.asarray(labels, dtype=np.int64)
        self.num_classes = int(num_classes)
        self.node_ids = (np.arange(graph.n) if node_ids is None
                         else np.asarray(node_ids, dtype=np.int64))
        self.id_map = id_map
        self.report = list(report)
        self._validate()

    def _validate(self):
        n = self.graph.n
        if self.features.shape[0] != n:
            raise DatasetError('{}: row-count mismatch ({} feature rows for {} nodes)'.format(
                self.name, self.features.shape[0], n))
        if len(self.labels) != n:
            raise DatasetError('{}: label count mismatch ({} labels for {} nodes)'.format(
                self.name, len(self.labels), n))
        if self.num_classes < 1:
            raise DatasetError('{}: num_classes must be positive'.format(self.name))
        if n and (self.labels.min() < 0 or self.labels.max() >= self.num_classes):
            raise DatasetError('{}: label out of range [0, {})'.format(
                self.name, self.num_classes))

    @property
    def n(self):
        return self.graph.n

    @property
    def num_features(self):
        return self.features.shape[1]

    def warn(self, message):
        log.warning('{}: {}'.format(self.name, message))
        self.report.append(message)

    def replace(self, **kwargs):
        values = dict(name=self.name, graph=self.graph, features=self.features,
                      labels=self.labels, num_classes=self.num_classes, node_ids=self.node_ids,
                      id_map=self.id_map, report=self.report)
        values.update(kwargs)
        return Dataset(**values)

    def normalized(self):
        """ Copy of the dataset with L1-normalized features """
        features = l1_normalize_features(self.features)
        normalized = self.replace(features=features)
        empty = zero_rows(features)
        if len(empty):
            normalized.warn('{} all-zero feature rows left unnormalized (first: node {})'.format(
                len(empty), self.node_ids[empty[0]]))
        return normalized

    def class_counts(self):
        return np.bincount(self.labels, minlength=self.num_classes)


def _read_lines(path):
    if not os.path.exists(path):
        raise DatasetError('missing file: {}'.format(path))
    with open(path) as f:
        for lineno, line in enumerate(f, 1):
            line = line.strip()
            if line and not line.startswith('#'):
                yield lineno, line


def _parse_int(path, lineno, token):
    try:
        value = int(token)
    except ValueError:
        raise _parse_error(path, lineno, 'non-integer node id {!r}'.format(token))
    if value < 0:
        raise _parse_error(path, lineno, 'negative node id {}'.format(value))
    return value


def _parse_float(path, lineno, token):
    try:
        value = float(token)
    except ValueError:
        raise _parse_error(path, lineno, 'non-numeric feature value {!r}'.format(token))
    if value < 0:
        raise _parse_error(path, lineno, 'negative feature value {}'.format(value))
    return value


def read_edges(path):
    edges = []
    for lineno, line in _read_lines(path):
        tokens = line.split()
        if len(tokens) != 2:
            raise _parse_error(path, lineno, "expected 'u v', got {!r}".format(line))
        edges.append((_parse_int(path, lineno, tokens[0]), _parse_int(path, lineno, tokens[1])))
    return np.asarray(edges, dtype=np.int64).reshape(-1, 2)


def read_dense_features(path):
    rows = []
    for lineno, line in _read_lines(path):
        row = [_parse_float(path, lineno, t) for t in line.split(',')]
        if rows and len(row) != len(rows[0]):
            raise _parse_error(path, lineno, 'expected {} columns, got {}'.format(
                len(rows[0]), len(row)))
        rows.append(row)
    return np.asarray(rows, dtype=np.float64)


def read_sparse_features(path, num_features=None):
    """ One node per line, space separated `idx:value` pairs

    A blank line (or a lone `-`) is an all-zero row; trailing blank lines are ignored.
    """
    if not os.path.exists(path):
        raise DatasetError('missing file: {}'.format(path))
    with open(path) as f:
        lines = [line.strip() for line in f]
    while lines and not lines[-1]:
        lines.pop()

    indptr, indices, data = [0], [], []
    for lineno, line in enumerate(lines, 1):
        for pair in line.split():
            if pair == '-':
                continue
            try:
                idx, value = pair.split(':')
            except ValueError:
                raise _parse_error(path, lineno, 'expected idx:value, got {!r}'.format(pair))
            indices.append(_parse_int(path, lineno, idx))
            data.append(_parse_float(path, lineno, value))
        indptr.append(len(indices))
    d = num_features or (max(indices) + 1 if indices else 1)
    if indices and max(indices) >= d:
        raise DatasetError('{}: feature index {} exceeds num_features {}'.format(
            os.path.basename(path), max(indices), d))
    return sp.csr_matrix((data, indices, indptr), shape=(len(indptr) - 1, d), dtype=np.float64)


def read_labels(path, num_classes):
    labels = []
    for lineno, line in _read_lines(path):
        try:
            label = int(line)
        except ValueError:
            raise _parse_error(path, lineno, 'non-integer label {!r}'.format(line))
        if not 0 <= label < num_classes:
            raise _parse_error(path, lineno, 'label {} out of range [0, {})'.format(
                label, num_classes))
        labels.append(label)
    return np.asarray(labels, dtype=np.int64)


def read_meta(path):
    if not os.path.exists(path):
        raise DatasetError('missing file: {}'.format(path))
    with open(path) as f:
        try:
            meta = json.load(f)
        except ValueError as e:
            raise DatasetError('{}: {}'.format(META_FILE, e))
    for key in ('name', 'num_classes'):
        if key not in meta:
            raise DatasetError('{}: missing key {!r}'.format(META_FILE, key))
    if meta.setdefault('features', 'dense') not in ('dense', 'sparse'):
        raise DatasetError("{}: features must be 'dense' or 'sparse'".format(META_FILE))
    return meta


def load_dataset(path):
    """ Load a dataset directory (graph.edges, features.csv, labels.csv, meta.json)

    Node ids in graph.edges are re-indexed densely in ascending order, unless meta.json
    carries `num_nodes`, in which case ids are used verbatim and must be below it.

    Returns:
        A validated Dataset over the raw (pre-LCC) graph, features not yet normalized
    """
    meta = read_meta(os.path.join(path, META_FILE))
    edges_path = os.path.join(path, EDGES_FILE)
    edges = read_edges(edges_path)

    if 'num_nodes' in meta:
        n = int(meta['num_nodes'])
        if len(edges) and edges.max() >= n:
            raise DatasetError('{}: node id {} out of range for num_nodes={}'.format(
                EDGES_FILE, edges.max(), n))
        node_ids = np.arange(n)
        dense_edges = edges
    else:
        node_ids, dense_edges = np.unique(edges, return_inverse=True)
        dense_edges = dense_edges.reshape(-1, 2)
        n = len(node_ids)

    features_path = os.path.join(path, FEATURES_FILE)
    if meta['features'] == 'sparse':
        features = read_sparse_features(features_path, meta.get('num_features'))
    else:
        features = read_dense_features(features_path)

    labels = read_labels(os.path.join(path, LABELS_FILE), int(meta['num_classes']))

    dataset = Dataset(meta['name'], Graph.from_edges(dense_edges, n), features, labels,
                      meta['num_classes'], node_ids=node_ids)
    missing = np.flatnonzero(dataset.class_counts() == 0)
    if len(missing):
        dataset.warn('classes {} have no nodes'.format(list(missing)))
    log.info("Loaded '{}': {} nodes, {} edges, {} features, {} classes".format(
        dataset.name, dataset.n, dataset.graph.num_edges, dataset.num_features,
        dataset.num_classes))
    return dataset


def largest_connected_component(dataset):
    """ Induced subgraph on the largest component, nodes re-indexed to 0..n'-1

    Equal-size components are resolved in favor of the one holding the smallest original id.
    """
    if dataset.n == 0:
        raise DatasetError('{}: empty graph'.format(dataset.name))

    _, component = dataset.graph.components()
    sizes = np.bincount(component)
    largest = np.flatnonzero(sizes == sizes.max())
    if len(largest) > 1:
        smallest_id = {c: dataset.node_ids[component == c].min() for c in largest}
        chosen = min(largest, key=lambda c: smallest_id[c])
    else:
        chosen = largest[0]

    nodes = np.flatnonzero(component == chosen)
    id_map = {int(old): new for new, old in enumerate(nodes)}

    lcc = Dataset(dataset.name, dataset.graph.subgraph(nodes), dataset.features[nodes],
                  dataset.labels[nodes], dataset.num_classes,
                  node_ids=dataset.node_ids[nodes], id_map=id_map, report=dataset.report)
    missing = np.flatnonzero(lcc.class_counts() == 0)
    if len(missing):
        lcc.warn('classes {} are absent from the largest connected component'.format(
            list(missing)))
    log.info("Largest connected component of '{}': {} of {} nodes, {} edges".format(
        dataset.name, lcc.n, dataset.n, lcc.graph.num_edges))
    return lcc


def l1_normalize_features(features):
    """ Scale every nonzero row to unit L1 norm; all-zero rows are left as they are """
    if sp.issparse(features):
        negative = (features.data < 0).any()
    else:
        negative = (np.asarray(features) < 0).any()
    if negative:
        raise DatasetError('negative feature value')
    return preprocessing.normalize(features, norm='l1', axis=1, copy=True)


def zero_rows(features):
    sums = np.asarray(abs(features).sum(axis=1)).ravel()
    return np.flatnonzero(sums == 0)
