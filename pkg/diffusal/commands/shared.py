import contextlib
import functools
import logging
import re
import time

import click
import yaml

log = logging.getLogger(__name__)

CONFIG_KEYS = ('alphas', 'epsilon', 'members', 'hidden', 'dropout', 'learning_rate',
               'weight_decay', 'max_epochs', 'patience', 'val_size', 'budget_max_multiple',
               'step_multiple', 'kmeans_restarts')


@contextlib.contextmanager
def log_duration(message, level=logging.DEBUG):
    start_time = time.monotonic()
    log.debug(message)
    yield
    log.log(level, 'done ({:.1f}s)'.format(time.monotonic() - start_time))


def parse_seeds(value):
    """ `0..9` (inclusive) or a comma-separated list """
    value = value.strip()
    match = re.match(r'^(\d+)\.\.(\d+)$', value)
    if match:
        start, stop = int(match.group(1)), int(match.group(2))
        if stop < start:
            raise ValueError('empty seed range {}'.format(value))
        return tuple(range(start, stop + 1))
    seeds = tuple(int(s) for s in value.split(',') if s.strip())
    if not seeds:
        raise ValueError('no seeds given')
    return seeds


def parse_floats(value):
    values = tuple(float(v) for v in value.split(',') if v.strip())
    if not values:
        raise ValueError('no values given')
    return values


def parse_budgets(value, num_classes):
    """ `aC..bC` (step aC, multiples of the class count) or comma-separated integers """
    value = value.strip()
    match = re.match(r'^(\d+)C\.\.(\d+)C$', value)
    if match:
        start, stop = int(match.group(1)), int(match.group(2))
        if start < 1 or stop < start:
            raise ValueError('invalid budget range {}'.format(value))
        return [k * num_classes for k in range(start, stop + 1, start)]
    budgets = [int(b) for b in value.split(',') if b.strip()]
    if not budgets or min(budgets) < 1:
        raise ValueError('budgets must be positive integers')
    return budgets


def _callback(parser):
    def callback(ctx, param, value):
        if value is None:
            return None
        try:
            return parser(value)
        except ValueError as e:
            raise click.BadParameter(str(e))
    return callback


seeds_callback = _callback(parse_seeds)
floats_callback = _callback(parse_floats)


def load_config_file(ctx, param, path):
    if path is None:
        return {}
    with open(path) as f:
        config = yaml.safe_load(f) or {}
    if not isinstance(config, dict):
        raise click.BadParameter('{} must hold a mapping'.format(path))
    unknown = sorted(set(config) - set(CONFIG_KEYS))
    if unknown:
        raise click.BadParameter('unknown keys in {}: {}'.format(path, ', '.join(unknown)))
    if 'alphas' in config:
        config['alphas'] = tuple(float(a) for a in config['alphas'])
    return config


def merge_config(ctx, options, file_config):
    """ Explicit command line flags win over the config file, which wins over defaults """
    merged = dict(options)
    for key, value in file_config.items():
        source = ctx.get_parameter_source(key) if key in options else None
        if source is None or source == click.core.ParameterSource.DEFAULT:
            merged[key] = value
    return merged


def domain_errors(*errors):
    """ Report the given exception types as click errors instead of tracebacks """
    def decorator(f):
        @functools.wraps(f)
        def wrapper(*args, **kwargs):
            try:
                return f(*args, **kwargs)
            except errors as e:
                raise click.ClickException(str(e))
        return wrapper
    return decorator
