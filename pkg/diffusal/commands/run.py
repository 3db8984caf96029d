import logging
import os

import click

from .. import core
from .. import diffusion
from .. import graph
from .. import model as qbc
from .. import results
from .. import strategy
from ..tools import ConfigError

from . import shared

log = logging.getLogger(__name__)

DEFAULT_MODEL = qbc.QBCConfig()
DEFAULT_EXPERIMENT = core.ExperimentConfig()


@click.option('--dataset', '-D', required=True, help="Dataset directory",
              type=click.Path(exists=True, file_okay=False))
@click.option('--strategy', '-s', 'kind', type=click.Choice(strategy.KINDS), default='diffusal',
              show_default=True)
@click.option('--seeds', default='0..9', callback=shared.seeds_callback, show_default=True,
              help="Seed range `a..b` or comma-separated seeds")
@click.option('--alphas', default=','.join(str(a) for a in diffusion.DEFAULT_ALPHAS),
              callback=shared.floats_callback, show_default=True,
              help="Comma-separated PPR restart probabilities, one per scale")
@click.option('--epsilon', type=float, default=diffusion.DEFAULT_EPSILON, show_default=True)
@click.option('--members', type=int, default=DEFAULT_MODEL.members, show_default=True,
              help="Committee size (1 is a plain MLP)")
@click.option('--hidden', type=int, default=DEFAULT_MODEL.hidden, show_default=True)
@click.option('--dropout', type=float, default=DEFAULT_MODEL.dropout, show_default=True)
@click.option('--lr', 'learning_rate', type=float, default=DEFAULT_MODEL.learning_rate,
              show_default=True)
@click.option('--weight-decay', type=float, default=DEFAULT_MODEL.weight_decay,
              show_default=True)
@click.option('--max-epochs', type=int, default=DEFAULT_MODEL.max_epochs, show_default=True)
@click.option('--patience', type=int, default=DEFAULT_MODEL.patience, show_default=True)
@click.option('--val-size', type=int, default=DEFAULT_EXPERIMENT.val_size, show_default=True)
@click.option('--budget-max-multiple', type=int, default=DEFAULT_EXPERIMENT.budget_max_multiple,
              show_default=True, help="Final budget in multiples of the class count")
@click.option('--step-multiple', type=int, default=DEFAULT_EXPERIMENT.step_multiple,
              show_default=True, help="Batch size in multiples of the class count")
@click.option('--kmeans-restarts', type=int, default=DEFAULT_EXPERIMENT.kmeans_restarts,
              show_default=True)
@click.option('--no-unc', is_flag=True, help="Disable the uncertainty score")
@click.option('--no-div', is_flag=True, help="Disable the diversity score")
@click.option('--no-imp', is_flag=True, help="Disable the importance score")
@click.option('--combine', type=click.Choice(strategy.COMBINE_MODES), default='multiplicative',
              show_default=True)
@click.option('--two-hop', is_flag=True, help="Replace diffusion with the 2-hop matrix")
@click.option('--out', '-o', required=True, type=click.Path(dir_okay=False),
              help="Results CSV; completed (dataset, strategy, seed) runs are skipped")
@click.option('--config', 'file_config', type=click.Path(exists=True, dir_okay=False),
              callback=shared.load_config_file, help="YAML file with option defaults")
@click.option('--cache-dir', type=click.Path(file_okay=False),
              help="Directory for cached diffusion matrices")
@click.option('--dump', 'dump_dir', type=click.Path(file_okay=False),
              help="Write per-run JSON debug dumps to this directory")
@click.pass_context
@shared.domain_errors(graph.DatasetError, ConfigError, results.ResultsError)
def command(ctx, **options):
    options = shared.merge_config(ctx, options, options.pop('file_config'))
    config = core.ExperimentConfig(
        dataset=options['dataset'],
        strategy=strategy.StrategyConfig(
            kind=options['kind'], use_unc=not options['no_unc'], use_div=not options['no_div'],
            use_imp=not options['no_imp'], combine=options['combine']),
        diffusion=diffusion.DiffusionConfig(options['alphas'], options['epsilon']),
        model=qbc.QBCConfig(
            members=options['members'], hidden=options['hidden'], dropout=options['dropout'],
            learning_rate=options['learning_rate'], weight_decay=options['weight_decay'],
            max_epochs=options['max_epochs'], patience=options['patience']),
        seeds=options['seeds'],
        val_size=options['val_size'],
        budget_max_multiple=options['budget_max_multiple'],
        step_multiple=options['step_multiple'],
        two_hop=options['two_hop'],
        cache_dir=options['cache_dir'],
        kmeans_restarts=options['kmeans_restarts'],
        dump_dir=options['dump_dir'])
    config = core.validate_experiment_config(config)

    out = options['out']
    skip = results.completed_keys(out)
    log.info("Running {} seeds, results in '{}'".format(len(config.seeds), out))

    sweep = core.run_sweep(config, skip=skip, parallel=ctx.obj['parallel'],
                           progress=ctx.obj['progress'])
    try:
        for seed, run_results in sweep:
            results.append_results(out, run_results)
    except core.ExperimentFailed as e:
        results.write_partial(out, e.results)
        raise click.ClickException(str(e))

    if os.path.exists(out):
        path = results.write_summary(out, results.read_results(out), core.config_metadata(config))
        log.info("Wrote summary to '{}'".format(path))
