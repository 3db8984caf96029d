import logging
import sys

import click

from . import analyze
from . import duel
from . import run

COMMANDS = dict(
    analyze=analyze.command,
    duel=duel.command,
    run=run.command,
)


@click.group()
@click.option('--debug', '-d', help="Print debug output (repeat for more)", count=True)
@click.option('--parallel', '-j', is_flag=True,
              help="Run seeds and diffusion columns in parallel using all cores")
@click.option('--progress', '-p', is_flag=True, help="Show progress bars")
@click.pass_context
def diffusal(ctx, **options):
    ctx.ensure_object(dict)
    ctx.obj.update(options)
    logging.basicConfig(stream=sys.stderr,
                        level=(logging.DEBUG if options['debug'] > 1 else
                               logging.INFO if options['debug'] == 1 else
                               logging.WARNING))


for name, cmd in COMMANDS.items():
    diffusal.command(name=name)(cmd)
