"""
.. currentmodule:: wfbench.cli

================================
command line (:mod:`wfbench.cli`)
================================

``wfbench <verb> [options]``, with the verbs ``gen-dataset``,
``candidates``, ``cluster``, ``indexes``, ``apply-defense``, ``run`` and
``report``. Every source of randomness is driven by ``--seed``.

Exit codes are 0 on success, 1 for usage errors, 2 for data errors (bad or
missing input files, invalid parameters) and 3 for internal errors.

.. autosummary::
    :toctree: generated/

    Verb
    Command
    parse_args
    main

"""
import csv
import enum
import logging
import re
import sys
from dataclasses import dataclass
from typing import Mapping, Sequence

import click

from . import _version
from .candidates import select_candidates
from .defenses import DefenseConfig, DefenseKind, apply_defense
from .harness import (
    DatasetSource, REPORT_HEADER, TREND_HEADER, emit_report, load_experiment_config,
    read_report, run_experiment, write_trend,
)
from .io import read_trace, save_dataset, write_dataset_h5, write_trace
from .synth import synth_generate
from .tools.clustering import Algorithm, cluster, pairwise_distances
from .tools.validity import compare_schemes, write_index_report
from .features import DEFAULT_M

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_INTERNAL = 3


class Verb(enum.Enum):
    GEN_DATASET = 'gen-dataset'
    CANDIDATES = 'candidates'
    CLUSTER = 'cluster'
    INDEXES = 'indexes'
    APPLY_DEFENSE = 'apply-defense'
    RUN = 'run'
    REPORT = 'report'


@dataclass(frozen=True)
class Command:
    verb: Verb
    options: Mapping


_ALGORITHMS = click.Choice([a.value for a in Algorithm], case_sensitive=False)


def _load(path):
    return DatasetSource(path).load()


@click.group()
@click.version_option(_version.__version__)
def cli():
    """ Website fingerprinting defense workbench """


@cli.command('gen-dataset')
@click.option('--sites', default=32, show_default=True, help='number of websites')
@click.option('--traces', default=20, show_default=True, help='traces per website')
@click.option('--seed', default=0, show_default=True)
@click.option('--out', required=True, help='output directory, or file for --format h5')
@click.option('--format', 'fmt', type=click.Choice(['csv', 'h5']), default='csv', show_default=True)
def gen_dataset(sites, traces, seed, out, fmt):
    """ Generates a synthetic dataset """
    dataset = synth_generate(n_sites=sites, traces_per_site=traces, seed=seed)
    if fmt == 'h5':
        write_dataset_h5(out, dataset)
    else:
        save_dataset(dataset, out)
    logger.info('wrote %d websites to %s', len(dataset), out)


@cli.command()
@click.option('--data', required=True, help='dataset directory or .h5 archive')
@click.option('--m', default=DEFAULT_M, show_default=True, help='slice count')
@click.option('--k-neighbors', type=int, default=None, help='LOF neighbourhood size')
@click.option('--out', default=None, help='CSV file; printed when omitted')
def candidates(data, m, k_neighbors, out):
    """ Selects the least outlying trace of every website """
    chosen = select_candidates(_load(data), m, k_neighbors)
    rows = [(s, chosen[s].trace_index, '{:.6g}'.format(chosen[s].lof_score)) for s in chosen.site_ids()]
    if out is None:
        for row in rows:
            click.echo(','.join(str(v) for v in row))
        return
    with open(out, 'w', newline='') as fp:
        w = csv.writer(fp)
        w.writerow(('site_id', 'trace_index', 'lof'))
        w.writerows(rows)


@cli.command('cluster')
@click.option('--data', required=True, help='dataset directory or .h5 archive')
@click.option('--algo', type=_ALGORITHMS, default='pam', show_default=True)
@click.option('--k', default=10, show_default=True, help='cluster count')
@click.option('--m', default=DEFAULT_M, show_default=True, help='slice count')
@click.option('--seed', default=0, show_default=True)
@click.option('--out', required=True, help='clustering file (json)')
def cluster_cmd(data, algo, k, m, seed, out):
    """ Clusters the candidate traces """
    chosen = select_candidates(_load(data), m)
    clustering = cluster(pairwise_distances(chosen.matrix()), algo.lower(), k, seed, labels=chosen.site_ids())
    clustering.save(out)
    logger.info('%s: %d candidates in %d clusters', algo.upper(), len(chosen), k)


@cli.command()
@click.option('--data', required=True, help='dataset directory or .h5 archive')
@click.option('--algo', type=_ALGORITHMS, multiple=True, help='repeatable; all algorithms when omitted')
@click.option('--k', multiple=True, type=int, help='repeatable; 8, 9 and 10 when omitted')
@click.option('--m', default=DEFAULT_M, show_default=True, help='slice count')
@click.option('--seed', default=0, show_default=True)
@click.option('--out', required=True, help='index table (CSV)')
def indexes(data, algo, k, m, seed, out):
    """ Tabulates cluster validity indexes per algorithm and cluster count """
    chosen = select_candidates(_load(data), m)
    algorithms = [a.lower() for a in algo] or [a.value for a in Algorithm]
    reports = compare_schemes(chosen.matrix(), algorithms, k or (8, 9, 10), seed)
    write_index_report(out, reports)


@cli.command('apply-defense')
@click.option('--trace', 'trace_file', required=True, help='source trace file')
@click.option('--defense', type=click.Choice([d.value for d in DefenseKind]), required=True)
@click.option('--target', default=None, help='destination trace file, for tgpsm and traffic_morph')
@click.option('--tau', type=float, default=None)
@click.option('--rho', type=float, default=None)
@click.option('--rho-in', type=float, default=None)
@click.option('--rho-out', type=float, default=None)
@click.option('--d', type=int, default=None, help='cell size, or the tuning factor for tgpsm')
@click.option('--L', 'L', type=int, default=None, help='count padding multiple')
@click.option('--sim-thresh', type=float, default=None)
@click.option('--alpha', type=float, default=None)
@click.option('--m', type=int, default=None)
@click.option('--bw-d-factor', type=float, default=None)
@click.option('--seed', default=0, show_default=True)
@click.option('--out', required=True, help='defended trace file')
def apply_defense_cmd(trace_file, defense, target, seed, out, **parameters):
    """ Applies a countermeasure to one trace file """
    parameters = {k: v for k, v in parameters.items() if v is not None}
    config = DefenseConfig(defense, parameters)
    source = read_trace(trace_file)
    destination = read_trace(target) if target is not None else None
    defended = apply_defense(source, config, seed, destination)
    write_trace(out, defended)
    before, after = source.stats(), defended.stats()
    click.echo('overhead {:.4f}%'.format(100.0 * (after.total_bytes - before.total_bytes) / before.total_bytes))


@cli.command()
@click.option('--config', 'config_file', required=True, help='experiment file')
@click.option('--out', required=True, help='report CSV')
@click.option('--trend', default=None, help='optional D sweep file')
@click.option('--progress/--no-progress', default=False)
def run(config_file, out, trend, progress):
    """ Runs every experiment of a config file """
    configs = load_experiment_config(config_file)
    datasets = {}
    reports = []
    for config in configs:
        if config.dataset not in datasets:
            datasets[config.dataset] = config.dataset.load()
        reports.append(run_experiment(config, datasets[config.dataset], progress=progress))
    emit_report(reports, out)
    if trend is not None:
        write_trend(reports, trend)


_D_PARAMETER = re.compile(r'(?:^|,\s*)d=([^,]+)')


@cli.command()
@click.argument('reports', nargs=-1, required=True)
@click.option('--out', required=True, help='merged report CSV')
@click.option('--trend', default=None, help='optional D sweep file built from rows with a d parameter')
def report(reports, out, trend):
    """ Merges saved report files """
    rows = [row for path in reports for row in read_report(path)]
    with open(out, 'w', newline='') as fp:
        w = csv.writer(fp)
        w.writerow(REPORT_HEADER)
        for row in rows:
            w.writerow([row['countermeasure'], row['parameters']] +
                       ['{:.4f}'.format(row[k]) for k in REPORT_HEADER[2:]])
    if trend is None:
        return
    points = []
    for row in rows:
        match = _D_PARAMETER.search(row['parameters'])
        if match:
            points.append((float(match.group(1)), row['overhead'], row['accuracy_mean']))
    with open(trend, 'w', newline='') as fp:
        w = csv.writer(fp)
        w.writerow(TREND_HEADER)
        for d, ov, acc in sorted(points, key=lambda p: p[0]):
            w.writerow(['{:g}'.format(d), '{:.4f}'.format(ov), '{:.4f}'.format(acc)])


def parse_args(argv: Sequence[str]) -> Command:
    """
    Parses a command line into a :class:`Command`.

    Raises :class:`click.UsageError` for unknown verbs, unknown flags and
    missing required flags.
    """
    argv = list(argv)
    if not argv:
        raise click.UsageError('missing command; one of: {}'.format(', '.join(v.value for v in Verb)))
    verb = argv[0]
    try:
        parsed = Verb(verb)
    except ValueError:
        raise click.UsageError('no such command {!r}'.format(verb)) from None
    command = cli.commands[verb]
    ctx = command.make_context(verb, argv[1:])
    return Command(parsed, dict(ctx.params))


def main(argv=None) -> int:
    logging.basicConfig(level=logging.INFO, format='%(levelname)s %(name)s: %(message)s')
    try:
        command = parse_args(sys.argv[1:] if argv is None else argv)
    except click.exceptions.Exit as e:
        return e.exit_code
    except click.UsageError as e:
        e.show()
        return EXIT_USAGE
    try:
        cli.commands[command.verb.value].callback(**command.options)
    except (ValueError, OSError) as e:
        logger.error('%s', e)
        return EXIT_DATA
    except Exception:
        logger.exception('internal error')
        return EXIT_INTERNAL
    return EXIT_OK
