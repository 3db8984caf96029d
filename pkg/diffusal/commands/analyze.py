import logging

import click

from .. import core
from .. import diffusion
from .. import graph
from .. import stats
from ..tools import ConfigError

from . import shared

log = logging.getLogger(__name__)

REPORTS = ('overlap', 'classdist')


@click.option('--dataset', '-D', required=True, help="Dataset directory",
              type=click.Path(exists=True, file_okay=False))
@click.option('--report', type=click.Choice(REPORTS), required=True,
              help="Importance vs degree overlap, or class distribution of important nodes")
@click.option('--budgets', default='2C..20C', show_default=True,
              help="`aC..bC` (step aC) or comma-separated node counts")
@click.option('--alphas', default=','.join(str(a) for a in diffusion.DEFAULT_ALPHAS),
              callback=shared.floats_callback, show_default=True)
@click.option('--epsilon', type=float, default=diffusion.DEFAULT_EPSILON, show_default=True)
@click.option('--two-hop', is_flag=True, help="Analyze the 2-hop matrix instead of diffusion")
@click.option('--cache-dir', type=click.Path(file_okay=False),
              help="Directory for cached diffusion matrices")
@click.option('--out', '-o', type=click.File(mode='w'), default='-',
              help="Output CSV (default is stdout)")
@click.pass_context
@shared.domain_errors(graph.DatasetError, ConfigError, stats.StatsError)
def command(ctx, **options):
    config = core.ExperimentConfig(
        dataset=options['dataset'],
        diffusion=diffusion.DiffusionConfig(options['alphas'], options['epsilon']),
        two_hop=options['two_hop'],
        cache_dir=options['cache_dir'])
    config = core.validate_experiment_config(config)
    prepared = core.prepare(config, parallel=ctx.obj['parallel'], progress=ctx.obj['progress'])
    dataset = prepared.dataset

    try:
        budgets = shared.parse_budgets(options['budgets'], dataset.num_classes)
    except ValueError as e:
        raise click.BadParameter(str(e), param_hint='--budgets')

    log.info("Generating '{}' report for budgets {}".format(options['report'], budgets))
    if options['report'] == 'overlap':
        report = stats.importance_degree_overlap(prepared.diffusion, dataset.graph, budgets,
                                                 columns=config.two_hop)
    else:
        report = stats.important_class_distribution(prepared.diffusion, dataset.labels,
                                                    dataset.num_classes, budgets,
                                                    columns=config.two_hop)
    report.to_csv(options['out'], index=False)
