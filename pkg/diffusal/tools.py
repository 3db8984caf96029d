import numpy as np


class ConfigError(ValueError):
    pass


def make_rng(*seeds):
    """ Seeded numpy generator; several seeds are mixed into one stream """
    return np.random.default_rng(list(seeds) if len(seeds) > 1 else seeds[0])


def rank(scores, candidates=None):
    """ Order candidates by descending score, ties broken by the smaller node id

    Args:
        scores: score per node (indexed by node id)
        candidates: node ids to rank (default is every node)

    Returns:
        numpy array of node ids, best first
    """
    scores = np.asarray(scores)
    if candidates is None:
        candidates = np.arange(len(scores))
    candidates = np.asarray(sorted(candidates), dtype=np.int64)
    # lexsort sorts by the last key first
    order = np.lexsort((candidates, -scores[candidates]))
    return candidates[order]


def top_k(scores, k, candidates=None):
    return rank(scores, candidates)[:k]


def argmax_smallest_id(values, nodes):
    """ Node with the largest value; `nodes` must be sorted ascending """
    return int(nodes[int(np.argmax(values))])
