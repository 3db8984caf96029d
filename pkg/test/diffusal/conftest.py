import json
import os

import numpy as np
import pytest

from diffusal import graph

TWO_BLOCKS_DIR = os.path.join(os.path.dirname(__file__), os.pardir, 'data', 'two-blocks')


@pytest.fixture
def path2():
    return graph.Graph.from_edges([(0, 1)], 2)


@pytest.fixture
def k3():
    return graph.Graph.from_edges([(0, 1), (1, 2), (0, 2)], 3)


@pytest.fixture
def star4():
    """ Center 0 with leaves 1..4 """
    return graph.Graph.from_edges([(0, 1), (0, 2), (0, 3), (0, 4)], 5)


@pytest.fixture
def two_blocks_dir():
    return os.path.abspath(TWO_BLOCKS_DIR)


@pytest.fixture
def two_blocks(two_blocks_dir):
    return graph.load_dataset(two_blocks_dir)


@pytest.fixture
def write_dataset(tmpdir):
    """ Writes a dataset directory from file contents, returns its path """
    def writer(edges_text, features_text, labels_text, num_classes, name='tiny', **meta):
        path = str(tmpdir.mkdir(name))
        for filename, content in ((graph.EDGES_FILE, edges_text),
                                  (graph.FEATURES_FILE, features_text),
                                  (graph.LABELS_FILE, labels_text)):
            with open(os.path.join(path, filename), 'w') as f:
                f.write(content)
        with open(os.path.join(path, graph.META_FILE), 'w') as f:
            json.dump(dict(meta, name=name, num_classes=num_classes), f)
        return path
    return writer


@pytest.fixture
def random_graph():
    """ Connected random graph: a random spanning tree plus extra edges """
    def factory(rng, n, extra_edges):
        edges = [(int(rng.integers(node)), node) for node in range(1, n)]
        for _ in range(extra_edges):
            u, v = rng.integers(n, size=2)
            edges.append((int(u), int(v)))
        return graph.Graph.from_edges(np.asarray(edges), n)
    return factory
