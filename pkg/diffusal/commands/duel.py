import json
import logging

import click

from .. import results
from .. import stats

from . import shared

log = logging.getLogger(__name__)


@click.option('--results', '-r', 'result_files', required=True, multiple=True,
              type=click.Path(exists=True, dir_okay=False),
              help="Results CSV (may be given several times)")
@click.option('--alpha', type=float, default=stats.DEFAULT_ALPHA, show_default=True,
              help="Significance level of the two-sided test")
@click.option('--out', '-o', type=click.File(mode='w'), default=None,
              help="Write the dueling matrix as JSON to this file")
@click.pass_context
@shared.domain_errors(results.ResultsError, stats.StatsError)
def command(ctx, result_files, alpha, out):
    all_results = [r for path in result_files for r in results.read_results(path)]
    with shared.log_duration('Computing dueling matrix...'):
        matrix = stats.duel_matrix(all_results, alpha=alpha)

    click.echo(matrix.wins.round(1).to_string())
    click.echo('\navg wins:\n{}'.format(matrix.avg_wins.round(1).to_string()))
    click.echo('\navg losses:\n{}'.format(matrix.avg_losses.round(1).to_string()))

    if out is not None:
        json.dump(stats.duel_document(matrix, alpha=alpha), out, indent=2, sort_keys=True)
