#!/usr/bin/env python3
"""
Quantum Graph Spectral Solver - Main CLI Entry Point
"""

import logging
import sys

import click


def _configure_logging(verbose: bool, quiet: bool) -> None:
    level = logging.DEBUG if verbose else logging.WARNING if quiet else logging.INFO
    logging.basicConfig(level=level, stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s", force=True)
    logging.captureWarnings(True)


def _range_option(cast):
    def callback(ctx, param, value):
        if value is None:
            return None
        from controllers import parse_range
        try:
            return parse_range(value, cast)
        except ValueError as e:
            raise click.BadParameter(str(e))
    return callback


def _run(method, **kwargs):
    from controllers import ControllerError
    try:
        click.echo(method(**kwargs))
    except ControllerError as e:
        raise click.ClickException(str(e))


@click.group()
@click.option('--verbose', '-v', is_flag=True, help='Enable debug logging')
@click.option('--quiet', '-q', is_flag=True, help='Only log warnings and errors')
@click.option('--seed', default=0, show_default=True, help='Seed for random graphs and lengths')
@click.option('--out', '-o', type=click.Path(dir_okay=False), help='Write the result to this file')
@click.option('--format', '-f', 'format_type', type=click.Choice(['table', 'json', 'csv']),
              default=None, help='Output format (default from config)')
@click.option('--config', 'config_path', type=click.Path(exists=True, dir_okay=False),
              help='Alternative config file')
@click.pass_context
def cli(ctx, verbose, quiet, seed, out, format_type, config_path):
    """Quantum Graph Spectral Solver

    Eigenvalues and eigenfunctions of the Laplacian on metric graphs with
    Neumann-Kirchhoff conditions, from equilateral approximations refined by
    the Newton-trace iteration.
    """
    _configure_logging(verbose, quiet)
    ctx.ensure_object(dict)
    ctx.obj['VERBOSE'] = verbose
    ctx.obj['QUIET'] = quiet
    ctx.obj['SEED'] = seed
    ctx.obj['OUT'] = out
    ctx.obj['CONFIG'] = config_path
    if format_type is None:
        from lib.config import ConfigManager
        try:
            format_type = ConfigManager(config_path).get_value('output', 'format', 'table')
        except (OSError, ValueError):
            format_type = 'table'
    ctx.obj['FORMAT'] = format_type


@cli.command()
@click.argument('kind', type=click.Choice(['star', 'path', 'cycle', 'diamond', 'ba']))
@click.option('--n', type=int, help='Number of vertices')
@click.option('--k', type=int, help='Edges attached per new vertex (ba)')
@click.option('--len', 'length_range', callback=_range_option(float), help='Length interval a..b')
@click.option('--decimals', type=int, help='Decimal digits of the lengths')
@click.pass_context
def generate(ctx, kind, n, k, length_range, decimals):
    """Generate a metric graph with seeded random edge lengths."""
    from controllers.graph import GraphController

    controller = GraphController(ctx.obj['CONFIG'])
    _run(controller.generate, kind=kind, n=n, k=k, seed=ctx.obj['SEED'],
         length_range=length_range, decimals=decimals,
         output_file=ctx.obj['OUT'], format_type=ctx.obj['FORMAT'])


@cli.command()
@click.argument('graph_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--Q', 'Q', type=click.IntRange(min=1), required=True, help='Number of eigenvalues')
@click.option('--h', type=float, help='Step size of the floor/ceil approximations')
@click.option('--exact-digits', type=click.IntRange(min=0),
              help='Reference spectrum from the gcd representation on this decimal grid')
@click.pass_context
def spectrum(ctx, graph_file, Q, h, exact_digits):
    """Compute the Q smallest eigenvalues of a graph."""
    from controllers.spectrum import SpectrumController

    controller = SpectrumController(ctx.obj['CONFIG'])
    _run(controller.spectrum, graph_file=graph_file, Q=Q, h=h, exact_digits=exact_digits,
         output_file=ctx.obj['OUT'], format_type=ctx.obj['FORMAT'])


@cli.command()
@click.argument('graph_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--Q', 'Q', type=click.IntRange(min=1), required=True, help='Number of eigenvalues')
@click.option('--J', 'j_range', required=True, callback=_range_option(int), help='Levels a..b, h = 2^-J')
@click.option('--nested', is_flag=True, help='Solve the levels by nested inverse iteration')
@click.option('--exact-digits', type=click.IntRange(min=0), help='Add errors against the reference spectrum')
@click.pass_context
def sweep(ctx, graph_file, Q, j_range, nested, exact_digits):
    """Floor/ceil eigenvalue estimates over a sequence of step sizes."""
    from controllers.spectrum import SpectrumController

    controller = SpectrumController(ctx.obj['CONFIG'])
    _run(controller.sweep, graph_file=graph_file, Q=Q, j_min=j_range[0], j_max=j_range[1],
         nested=nested, exact_digits=exact_digits,
         output_file=ctx.obj['OUT'], format_type=ctx.obj['FORMAT'])


@cli.command()
@click.argument('graph_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--z', 'z_range', required=True, callback=_range_option(float), help='Scan interval a..b')
@click.option('--samples', type=click.IntRange(min=2), default=1000, show_default=True,
              help='Number of evenly spaced samples')
@click.pass_context
def scan(ctx, graph_file, z_range, samples):
    """Reciprocal condition number of H(z) over an interval."""
    from controllers.spectrum import SpectrumController

    controller = SpectrumController(ctx.obj['CONFIG'])
    _run(controller.scan, graph_file=graph_file, z_min=z_range[0], z_max=z_range[1], samples=samples,
         output_file=ctx.obj['OUT'], format_type=ctx.obj['FORMAT'])


@cli.command()
@click.argument('graph_file', type=click.Path(exists=True, dir_okay=False))
@click.option('--index', type=click.IntRange(min=1), help='1-based eigenvalue index (needs --h)')
@click.option('--lambda', 'value', type=float, help='Eigenvalue to reconstruct')
@click.option('--h', type=float, help='Step size used to compute the spectrum')
@click.option('--resolution', type=click.IntRange(min=2), default=50, show_default=True,
              help='Sample points per edge')
@click.pass_context
def eigenfunction(ctx, graph_file, index, value, h, resolution):
    """Reconstruct, check and sample the eigenfunctions of one eigenvalue."""
    from controllers.eigenfunction import EigenfunctionController

    controller = EigenfunctionController(ctx.obj['CONFIG'])
    _run(controller.eigenfunction, graph_file=graph_file, index=index, value=value, h=h,
         resolution=resolution, output_file=ctx.obj['OUT'], format_type=ctx.obj['FORMAT'])


if __name__ == '__main__':
    cli(obj={})
