""" Persistent store for diffusion matrices, keyed by (dataset, alphas, epsilon) or 2-hop """

import contextlib
import hashlib
import logging
import os
import re

import scipy.sparse as sp
import yaml

log = logging.getLogger(__name__)

CACHE_FORMAT_VERSION = 1


def diffusion_key(name, alphas, epsilon, two_hop=False):
    """ File-system safe key for a diffusion configuration """
    if two_hop:
        description = '{}-2hop'.format(name)
    else:
        description = '{}-a{}-e{!r}'.format(name, '_'.join(repr(float(a)) for a in alphas),
                                            float(epsilon))
    safe = re.sub(r'[^\w.-]', '_', description)
    digest = hashlib.sha1(description.encode('utf-8')).hexdigest()[:8]
    return '{}-{}'.format(safe, digest)


class MatrixStore(object):
    """ A directory of `<key>.npz` sparse matrices with `<key>.yaml` headers """

    def __init__(self, path):
        self._root = path

    @property
    def path(self):
        return self._root

    def _file(self, key, suffix):
        return os.path.join(self._root, key + suffix)

    @contextlib.contextmanager
    def _add_file(self, key, suffix, mode='w'):
        if not os.path.exists(self._root):
            os.makedirs(self._root)
        final_path = self._file(key, suffix)
        tmp_path = final_path + '.tmp'
        with open(tmp_path, mode) as f:
            yield f
        os.replace(tmp_path, final_path)

    def set(self, key, matrix, header):
        header = dict(header, version=CACHE_FORMAT_VERSION, n=int(matrix.shape[0]),
                      nnz=int(matrix.nnz))
        with self._add_file(key, '.npz', mode='wb') as f:
            sp.save_npz(f, sp.csr_matrix(matrix), compressed=False)
        with self._add_file(key, '.yaml') as f:
            yaml.safe_dump(header, f, default_flow_style=False)
        log.debug("Stored diffusion matrix '{}'".format(key))

    def header(self, key):
        path = self._file(key, '.yaml')
        if not os.path.exists(path):
            return None
        with open(path) as f:
            return yaml.safe_load(f)

    def get(self, key, default=None):
        header = self.header(key)
        if header is None or header.get('version') != CACHE_FORMAT_VERSION:
            return default
        matrix = sp.load_npz(self._file(key, '.npz')).tocsr()
        if matrix.shape[0] != header['n'] or matrix.nnz != header['nnz']:
            log.warning("Ignoring corrupt cache entry '{}'".format(key))
            return default
        return matrix

    def rm(self, key):
        for suffix in ('.npz', '.yaml'):
            if os.path.exists(self._file(key, suffix)):
                os.remove(self._file(key, suffix))
