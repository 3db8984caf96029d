""" Query-by-committee classifier over pre-diffused features

M one-hidden-layer members transform the same input; their ReLU activations are summed and fed
to a single shared softmax layer.
"""

import collections
import json
import logging

import numpy as np
from scipy import special

from . import tools
from .tools import ConfigError

log = logging.getLogger(__name__)

CHECKPOINT_VERSION = 1

QBCConfig = collections.namedtuple('QBCConfig', (
    'members', 'hidden', 'dropout', 'learning_rate', 'weight_decay', 'max_epochs', 'patience',
    'seed'))
QBCConfig.__new__.__defaults__ = (5, 16, 0.5, 0.01, 5e-4, 300, 20, 0)

TrainReport = collections.namedtuple('TrainReport',
                                     ('epochs_run', 'best_val_accuracy', 'final_train_loss'))

PARAMETERS = ('hidden_weights', 'hidden_biases', 'output_weights', 'output_biases')
DECAYED_PARAMETERS = ('hidden_weights', 'output_weights')


class ModelError(Exception):
    pass


def validate_qbc_config(config):
    if config.members < 1:
        raise ConfigError('members must be at least 1, got {}'.format(config.members))
    if config.hidden < 1:
        raise ConfigError('hidden must be at least 1, got {}'.format(config.hidden))
    if not 0 <= config.dropout < 1:
        raise ConfigError('dropout must lie in [0, 1), got {}'.format(config.dropout))
    if config.learning_rate < 0:
        raise ConfigError('learning_rate must not be negative, got {}'.format(
            config.learning_rate))
    if config.weight_decay < 0:
        raise ConfigError('weight_decay must not be negative, got {}'.format(
            config.weight_decay))
    if config.max_epochs < 1:
        raise ConfigError('max_epochs must be at least 1, got {}'.format(config.max_epochs))
    if config.patience < 0:
        raise ConfigError('patience must not be negative, got {}'.format(config.patience))
    return config


class Adam(object):
    def __init__(self, params, learning_rate, beta1=0.9, beta2=0.999, eps=1e-8):
        self.learning_rate = learning_rate
        self.beta1 = beta1
        self.beta2 = beta2
        self.eps = eps
        self.t = 0
        self.m = {name: np.zeros_like(value) for name, value in params.items()}
        self.v = {name: np.zeros_like(value) for name, value in params.items()}

    def step(self, params, grads):
        """ In-place update of `params` """
        self.t += 1
        for name, grad in grads.items():
            self.m[name] = self.beta1 * self.m[name] + (1 - self.beta1) * grad
            self.v[name] = self.beta2 * self.v[name] + (1 - self.beta2) * grad ** 2
            m_hat = self.m[name] / (1 - self.beta1 ** self.t)
            v_hat = self.v[name] / (1 - self.beta2 ** self.t)
            params[name] -= self.learning_rate * m_hat / (np.sqrt(v_hat) + self.eps)


class QBCModel(object):
    def __init__(self, config, params, dropout_rng):
        """ Create a QBCModel from explicit parameters

        Args:
            config (QBCConfig): hyper-parameters
            params: dict with hidden_weights (M x d x h), hidden_biases (M x h),
                output_weights (h x C) and output_biases (C)
            dropout_rng: numpy Generator drawing dropout masks
        """
        self.config = config
        self.params = params
        self.dropout_rng = dropout_rng
        self.optimizer = Adam(params, config.learning_rate)

    @property
    def members(self):
        return self.params['hidden_weights'].shape[0]

    @property
    def num_features(self):
        return self.params['hidden_weights'].shape[1]

    @property
    def num_classes(self):
        return self.params['output_biases'].shape[0]

    def copy_parameters(self):
        return {name: value.copy() for name, value in self.params.items()}

    def set_parameters(self, params):
        for name in PARAMETERS:
            self.params[name][...] = params[name]

    def _check_features(self, features):
        if features.ndim != 2 or features.shape[1] != self.num_features:
            raise ModelError('dimension mismatch: model expects {} features, got {}'.format(
                self.num_features, features.shape))

    def sample_masks(self, rows):
        """ Inverted-dropout masks for inputs (M x rows x d) and hidden units (rows x M x h) """
        p = self.config.dropout
        if p == 0:
            return None
        m, d, h = self.params['hidden_weights'].shape
        keep = 1.0 - p
        input_masks = (self.dropout_rng.random((m, rows, d)) >= p) / keep
        hidden_masks = (self.dropout_rng.random((rows, m, h)) >= p) / keep
        return input_masks, hidden_masks

    def _forward(self, features, masks=None):
        self._check_features(features)
        weights = self.params['hidden_weights']
        biases = self.params['hidden_biases']
        m, d, h = weights.shape

        if masks is None:
            stacked = weights.transpose(1, 0, 2).reshape(d, m * h)
            pre = (features @ stacked).reshape(-1, m, h) + biases
            inputs = None
        else:
            input_masks, hidden_masks = masks
            inputs = [features * input_masks[j] for j in range(m)]
            pre = np.stack([inputs[j] @ weights[j] + biases[j] for j in range(m)], axis=1)

        hidden = np.maximum(pre, 0.0)
        if masks is not None:
            hidden = hidden * hidden_masks
        latent = hidden.sum(axis=1)
        logits = latent @ self.params['output_weights'] + self.params['output_biases']
        return logits, (inputs, pre, latent)

    def forward(self, features, train_mode=False):
        features = np.asarray(features, dtype=np.float64)
        masks = self.sample_masks(features.shape[0]) if train_mode else None
        logits, _ = self._forward(features, masks)
        return special.softmax(logits, axis=1)

    def latent(self, features):
        """ Summed member representations (eval mode) """
        _, (_, _, latent) = self._forward(np.asarray(features, dtype=np.float64))
        return latent

    def _l2_penalty(self):
        return 0.5 * self.config.weight_decay * sum(
            (self.params[name] ** 2).sum() for name in DECAYED_PARAMETERS)

    def loss(self, features, labels):
        """ Eval-mode cross entropy plus L2 penalty """
        logits, _ = self._forward(np.asarray(features, dtype=np.float64))
        log_probs = special.log_softmax(logits, axis=1)
        return float(-log_probs[np.arange(len(labels)), labels].mean() + self._l2_penalty())

    def loss_and_gradients(self, features, labels, masks=None):
        """ Mean cross entropy + (weight_decay / 2) * sum of squared weights, with gradients

        Args:
            features: rows of the training nodes
            labels: their class indices
            masks: dropout masks from sample_masks (None disables dropout)

        Returns:
            (loss, dict of gradients keyed like params)
        """
        features = np.asarray(features, dtype=np.float64)
        labels = np.asarray(labels, dtype=np.int64)
        count = len(labels)
        logits, (inputs, pre, latent) = self._forward(features, masks)
        log_probs = special.log_softmax(logits, axis=1)
        loss = -log_probs[np.arange(count), labels].mean() + self._l2_penalty()

        wd = self.config.weight_decay
        weights = self.params['hidden_weights']
        d_logits = np.exp(log_probs)
        d_logits[np.arange(count), labels] -= 1.0
        d_logits /= count

        grads = {
            'output_weights': latent.T @ d_logits + wd * self.params['output_weights'],
            'output_biases': d_logits.sum(axis=0),
        }
        d_hidden = np.broadcast_to((d_logits @ self.params['output_weights'].T)[:, None, :],
                                   pre.shape)
        if masks is not None:
            d_hidden = d_hidden * masks[1]
        d_pre = d_hidden * (pre > 0)
        grads['hidden_biases'] = d_pre.sum(axis=0)
        grads['hidden_weights'] = np.stack([
            (features if inputs is None else inputs[j]).T @ d_pre[:, j, :]
            for j in range(weights.shape[0])]) + wd * weights
        return float(loss), grads


def init_model(config, num_features, num_classes):
    """ Fresh committee; weights and biases ~ U(-1/sqrt(fan_in), 1/sqrt(fan_in)) per member """
    validate_qbc_config(config)
    if num_features < 1 or num_classes < 1:
        raise ModelError('num_features and num_classes must be positive')
    rng = tools.make_rng(config.seed)
    m, h = config.members, config.hidden
    hidden_bound = 1.0 / np.sqrt(num_features)
    output_bound = 1.0 / np.sqrt(h)
    params = {
        'hidden_weights': rng.uniform(-hidden_bound, hidden_bound, (m, num_features, h)),
        'hidden_biases': rng.uniform(-hidden_bound, hidden_bound, (m, h)),
        'output_weights': rng.uniform(-output_bound, output_bound, (h, num_classes)),
        'output_biases': rng.uniform(-output_bound, output_bound, num_classes),
    }
    return QBCModel(config, params, tools.make_rng(config.seed, 1))


def forward(model, features, train_mode=False):
    return model.forward(features, train_mode=train_mode)


def latent(model, features):
    return model.latent(features)


def _train_nodes(train_set):
    nodes = np.asarray(sorted(train_set), dtype=np.int64)
    if not len(nodes):
        raise ModelError('empty train set')
    return nodes


def train_one_epoch(model, features, labels, train_set, config=None):
    """ One full-batch Adam step on the training nodes; returns the post-step loss """
    nodes = _train_nodes(train_set)
    config = config or model.config
    rows, targets = features[nodes], labels[nodes]
    _, grads = model.loss_and_gradients(rows, targets, model.sample_masks(len(nodes)))
    model.optimizer.learning_rate = config.learning_rate
    model.optimizer.step(model.params, grads)
    return model.loss(rows, targets)


def accuracy(model, features, labels, nodes):
    nodes = np.asarray(sorted(nodes), dtype=np.int64)
    if not len(nodes):
        return float('nan')
    predictions = model.forward(features[nodes]).argmax(axis=1)
    return float((predictions == labels[nodes]).mean())


def train_full(model, features, labels, train_set, val_set, config=None):
    """ Train with early stopping on validation accuracy

    Stops once validation accuracy has not improved for `patience` epochs (or after
    `max_epochs`) and restores the best-validation parameters. Without validation nodes every
    epoch runs and the final parameters are kept.

    Returns:
        TrainReport
    """
    config = config or model.config
    nodes = _train_nodes(train_set)
    val_nodes = np.asarray(sorted(val_set), dtype=np.int64)
    if len(np.intersect1d(nodes, val_nodes)):
        raise ModelError('validation and training sets overlap')

    best_accuracy = float('-inf')
    best_params = None
    since_improvement = 0
    epochs_run = 0
    for epoch in range(1, config.max_epochs + 1):
        loss = train_one_epoch(model, features, labels, nodes, config)
        epochs_run = epoch
        if not len(val_nodes):
            continue
        val_accuracy = accuracy(model, features, labels, val_nodes)
        log.debug('epoch {}: loss {:.4f}, val accuracy {:.4f}'.format(epoch, loss, val_accuracy))
        if val_accuracy > best_accuracy:
            best_accuracy = val_accuracy
            best_params = model.copy_parameters()
            since_improvement = 0
        else:
            since_improvement += 1
        if since_improvement >= config.patience:
            break

    if best_params is not None:
        model.set_parameters(best_params)
    final_loss = model.loss(features[nodes], labels[nodes])
    return TrainReport(epochs_run, best_accuracy if len(val_nodes) else float('nan'), final_loss)


def entropy(probabilities):
    """ Shannon entropy per row, 0 log 0 := 0 """
    return special.entr(probabilities).sum(axis=1)


def l1_normalize(scores):
    total = scores.sum()
    if total <= 0:
        return np.zeros_like(scores)
    return scores / total


def uncertainty_scores(model, features, unlabeled):
    """ Entropy of the shared softmax, L1-normalized over the unlabeled nodes

    Returns:
        scores aligned with sorted(unlabeled)
    """
    nodes = np.asarray(sorted(unlabeled), dtype=np.int64)
    if not len(nodes):
        raise ModelError('empty unlabeled set')
    return l1_normalize(entropy(model.forward(features[nodes])))


def save_checkpoint(model, path):
    np.savez(path, version=CHECKPOINT_VERSION, config=json.dumps(model.config._asdict()),
             **model.params)


def load_checkpoint(path):
    with np.load(path) as data:
        if int(data['version']) != CHECKPOINT_VERSION:
            raise ModelError('unsupported checkpoint version {}'.format(int(data['version'])))
        config = QBCConfig(**json.loads(str(data['config'])))
        params = {name: data[name].copy() for name in PARAMETERS}
    return QBCModel(config, params, tools.make_rng(config.seed, 1))
