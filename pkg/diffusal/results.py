""" RunResult persistence: append-only CSV, JSON summary, partial files and debug dumps """

import collections
import csv
import io
import json
import logging
import os

import pandas as pd

log = logging.getLogger(__name__)

COLUMNS = ('dataset', 'strategy', 'seed', 'budget', 'test_accuracy', 'acq_time_s',
           'train_time_s')

TEST_SPLIT_CONVENTION = 'all nodes outside labeled and validation, recomputed per budget'

RunResult = collections.namedtuple('RunResult', (
    'dataset', 'strategy', 'seed', 'budget', 'test_accuracy', 'acquisition_time_s',
    'training_time_s'))


class ResultsError(Exception):
    pass


def _format_row(result):
    return [result.dataset, result.strategy, str(int(result.seed)), str(int(result.budget)),
            repr(float(result.test_accuracy)), repr(float(result.acquisition_time_s)),
            repr(float(result.training_time_s))]


def _parse_row(row, lineno, source='<results>'):
    if len(row) != len(COLUMNS):
        raise ResultsError('{}:{}: expected {} columns, got {}'.format(
            source, lineno, len(COLUMNS), len(row)))
    dataset, strategy, seed, budget, test_accuracy, acq_time, train_time = row
    try:
        return RunResult(dataset, strategy, int(seed), int(budget), float(test_accuracy),
                         float(acq_time), float(train_time))
    except ValueError as e:
        raise ResultsError('{}:{}: {}'.format(source, lineno, e))


def serialize(results, header=True):
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator='\n')
    if header:
        writer.writerow(COLUMNS)
    for result in results:
        writer.writerow(_format_row(result))
    return buf.getvalue()


def parse(text, source='<results>'):
    rows = csv.reader(io.StringIO(text))
    header = next(rows, None)
    if header is None:
        return []
    if tuple(header) != COLUMNS:
        raise ResultsError('{}: unexpected header {}'.format(source, ','.join(header)))
    return [_parse_row(row, lineno, source)
            for lineno, row in enumerate(rows, start=2) if row]


def append_results(path, results):
    """ Append one run's rows in a single write, adding the header to a new file """
    results = list(results)
    if not results:
        return
    new_file = not os.path.exists(path) or os.path.getsize(path) == 0
    with open(path, 'a') as f:
        f.write(serialize(results, header=new_file))
    log.debug("Appended {} rows to '{}'".format(len(results), path))


def read_results(path):
    with open(path) as f:
        return parse(f.read(), source=path)


def results_frame(results):
    return pd.DataFrame([_format_row(r) for r in results], columns=COLUMNS).astype(dict(
        seed=int, budget=int, test_accuracy=float, acq_time_s=float, train_time_s=float))


def completed_keys(path):
    """ (dataset, strategy, seed) keys already present in a results file """
    if not os.path.exists(path):
        return set()
    return set((r.dataset, r.strategy, r.seed) for r in read_results(path))


def partial_path(out):
    return out + '.partial.csv'


def write_partial(out, results):
    path = partial_path(out)
    with open(path, 'w') as f:
        f.write(serialize(results))
    log.warning("Wrote {} partial results to '{}'".format(len(results), path))
    return path


def summarize(results):
    """ Mean/std accuracy and mean timings per (dataset, strategy, budget) """
    frame = results_frame(results)
    if frame.empty:
        return []
    grouped = frame.groupby(['dataset', 'strategy', 'budget']).agg(
        mean_accuracy=('test_accuracy', 'mean'),
        std_accuracy=('test_accuracy', 'std'),
        seeds=('seed', 'nunique'),
        mean_acq_time_s=('acq_time_s', 'mean'),
        mean_train_time_s=('train_time_s', 'mean'))
    grouped = grouped.reset_index().fillna({'std_accuracy': 0.0})
    return [{k: (v.item() if hasattr(v, 'item') else v) for k, v in row.items()}
            for row in grouped.to_dict(orient='records')]


def summary_path(out):
    return out + '.summary.json'


def write_summary(out, results, config=None):
    path = summary_path(out)
    document = dict(test_split=TEST_SPLIT_CONVENTION, config=config or {},
                    results=summarize(results))
    tmp_path = path + '.tmp'
    with open(tmp_path, 'w') as f:
        json.dump(document, f, indent=2, sort_keys=True)
    os.replace(tmp_path, path)
    return path


def write_dump(directory, dataset, strategy, seed, payload):
    """ Per-run debug dump: `<dir>/<dataset>-<strategy>-<seed>.json` """
    if not os.path.exists(directory):
        os.makedirs(directory)
    path = os.path.join(directory, '{}-{}-{}.json'.format(dataset, strategy, seed))
    with open(path, 'w') as f:
        json.dump(payload, f, indent=2, sort_keys=True, default=_jsonable)
    return path


def _jsonable(value):
    if hasattr(value, 'tolist'):
        return value.tolist()
    raise TypeError('{!r} is not JSON serializable'.format(value))
