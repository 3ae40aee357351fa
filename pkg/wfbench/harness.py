"""
.. currentmodule:: wfbench.harness

=======================================
closed-world evaluation (:mod:`wfbench.harness`)
=======================================

Each trial samples ``k`` websites, splits each site's traces into disjoint
training and test sets, applies the countermeasure to every trace of both
sets, trains a classifier on the defended training traces and scores it on
the defended test traces. An experiment repeats the trial with seeds derived
from one master seed and reports means and sample standard deviations.

Overhead and delay are averaged per trace: each defended trace contributes
``100 * (defended - original) / original`` of its bytes and of its duration.

For the morphing countermeasures, candidates and their clustering are
computed once per experiment over the whole pool; every sampled site
receives one designation per trial and all its traces, training and test
alike, are morphed toward that destination. All cluster designations of
a trial share one seed, so the sites of one source cluster meet the same
destination and become hard to tell apart.

.. autosummary::
    :toctree: generated/

    DatasetSource
    ExperimentConfig
    TrialResult
    ExperimentReport
    SamplingError
    ConfigError
    run_trial
    run_experiment
    emit_report
    read_report
    write_trend
    load_experiment_config

"""
import configparser
import csv
import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np
from tqdm import tqdm

from . import num_threads
from ._trace import Dataset, Trace
from .attacks import ClassifierKind, accuracy, train
from .candidates import select_candidates
from .defenses import DefenseConfig, DefenseKind, apply_defense
from .designator import TargetDesignator, DEFAULT_N_CLUSTERS
from .features import DEFAULT_M
from .io import load_dataset, read_dataset_h5
from .synth import synth_generate
from .tools.clustering import Algorithm

logger = logging.getLogger(__name__)

DEFAULT_T_TRAIN = 16
DEFAULT_T_TEST = 4
DEFAULT_TRIALS = 10
#: per-site split used when a site has too few traces for the configured one
FALLBACK_SPLIT = (2, 4)

REPORT_HEADER = (
    'countermeasure', 'parameters', 'overhead', 'accuracy_mean', 'accuracy_std',
    'overhead_std', 'delay', 'delay_std',
)
TREND_HEADER = ('D', 'overhead', 'accuracy')


class SamplingError(ValueError):
    """ Raised when the pool has too few eligible websites for a trial """
    def __init__(self, message, shortfall: int):
        super().__init__(message)
        self.shortfall = shortfall


class ConfigError(ValueError):
    """ Raised for invalid experiment configuration files """


@dataclass(frozen=True)
class DatasetSource:
    """ Where an experiment's pool comes from.

    A ``path`` ending in ``.h5`` is read as an archive, any other path as a
    trace directory tree; without a path a synthetic pool is generated.
    """
    path: Optional[str] = None
    synth_sites: int = 32
    synth_traces: int = 20
    synth_seed: int = 0

    def load(self) -> Dataset:
        if self.path is None:
            return synth_generate(n_sites=self.synth_sites, traces_per_site=self.synth_traces,
                                  seed=self.synth_seed)
        if Path(self.path).suffix == '.h5':
            return read_dataset_h5(self.path)
        return load_dataset(self.path)


@dataclass(frozen=True)
class ExperimentConfig:
    """ One countermeasure evaluated against one classifier.

    ``designation`` is ``'cluster'`` for the clustered target choice or
    ``'random'`` for a uniformly random other site; it only matters for
    :attr:`~wfbench.defenses.DefenseKind.TGPSM`. ``label`` names the
    countermeasure in reports and defaults to the defense kind.
    """
    defense: DefenseConfig = field(default_factory=lambda: DefenseConfig(DefenseKind.NONE))
    classifier: ClassifierKind = ClassifierKind.LL
    k: int = 32
    t_train: int = DEFAULT_T_TRAIN
    t_test: int = DEFAULT_T_TEST
    trials: int = DEFAULT_TRIALS
    seed: int = 0
    dataset: DatasetSource = field(default_factory=DatasetSource)
    m: int = DEFAULT_M
    n_clusters: int = DEFAULT_N_CLUSTERS
    algorithm: Algorithm = Algorithm.PAM
    train_on_undefended: bool = False
    designation: str = 'cluster'
    label: str = ''

    def __post_init__(self):
        object.__setattr__(self, 'classifier', ClassifierKind(self.classifier))
        object.__setattr__(self, 'algorithm', Algorithm(self.algorithm))
        if self.k < 2:
            raise ValueError('k must be at least 2, not {}'.format(self.k))
        if self.t_train < 1 or self.t_test < 1:
            raise ValueError('t_train and t_test must be positive')
        if self.trials < 1:
            raise ValueError('trials must be at least 1, not {}'.format(self.trials))
        if self.designation not in ('cluster', 'random'):
            raise ValueError('designation must be cluster or random, not {!r}'.format(self.designation))
        if not self.label:
            object.__setattr__(self, 'label', self.defense.kind.value)


@dataclass(frozen=True)
class TrialResult:
    seed: int
    accuracy: float
    overhead_percent: float
    delay_percent: float
    correct: int
    total: int


def _mean_std(values: Sequence[float]) -> Tuple[float, float]:
    values = np.asarray(values, dtype=np.float64)
    std = float(values.std(ddof=1)) if len(values) > 1 else 0.0
    return float(values.mean()), std


@dataclass(frozen=True)
class ExperimentReport:
    config: ExperimentConfig
    trials: Tuple[TrialResult, ...]

    @property
    def accuracy(self) -> Tuple[float, float]:
        """ Mean and sample standard deviation over trials """
        return _mean_std([t.accuracy for t in self.trials])

    @property
    def overhead(self) -> Tuple[float, float]:
        return _mean_std([t.overhead_percent for t in self.trials])

    @property
    def delay(self) -> Tuple[float, float]:
        return _mean_std([t.delay_percent for t in self.trials])


class _Targets(object):
    """ Destination traces of the morphing countermeasures, shared by all trials """
    def __init__(self, config: ExperimentConfig, dataset: Dataset):
        self.config = config
        self.designator = None
        if config.defense.kind.needs_target:
            candidates = select_candidates(dataset, config.m)
            self.designator = TargetDesignator(candidates, config.algorithm, config.n_clusters, config.seed)

    def eligible(self, site_id) -> bool:
        return self.designator is None or site_id in self.designator.candidates

    def target_for(self, site_id, trial_seed: int, site_seed: int) -> Optional[Trace]:
        if self.designator is None:
            return None
        defense = self.config.defense
        if defense.kind is DefenseKind.TGPSM and self.config.designation == 'cluster':
            return self.designator.designate(site_id, defense['d'], trial_seed).destination_trace
        return self.designator.designate_random(site_id, site_seed).destination_trace


def _percent_change(new: float, old: float) -> float:
    if old == 0:
        return 0.0
    return 100.0 * (new - old) / old


def _split(n: int, config: ExperimentConfig) -> Tuple[int, int]:
    if n >= config.t_train + config.t_test:
        return config.t_train, config.t_test
    return FALLBACK_SPLIT


def run_trial(config: ExperimentConfig, trial_seed: int, dataset: Optional[Dataset] = None,
              targets: Optional[_Targets] = None) -> TrialResult:
    """
    Runs one closed-world trial.

    Sites with fewer than ``t_train + t_test`` traces use a 2/4 split and
    need at least 6 traces to be eligible. The accuracy denominator is the
    number of test traces actually scored.
    """
    if dataset is None:
        dataset = config.dataset.load()
    if targets is None:
        targets = _Targets(config, dataset)
    rng = np.random.default_rng(trial_seed)

    need = min(config.t_train + config.t_test, sum(FALLBACK_SPLIT))
    eligible = [ws.site_id for ws in dataset if len(ws) >= need and targets.eligible(ws.site_id)]
    if len(eligible) < config.k:
        shortfall = config.k - len(eligible)
        raise SamplingError('need {} websites with at least {} traces, found {} (short by {})'.format(
            config.k, need, len(eligible), shortfall), shortfall)
    sites = [eligible[i] for i in rng.choice(len(eligible), config.k, replace=False)]

    train_set, test_set = [], []
    overheads, delays = [], []
    designation_seed = int(rng.integers(2 ** 32))
    for site_id in sites:
        traces = dataset[site_id].traces
        n_train, n_test = _split(len(traces), config)
        order = rng.permutation(len(traces))
        target = targets.target_for(site_id, designation_seed, int(rng.integers(2 ** 32)))
        for position, i in enumerate(order[:n_train + n_test]):
            original = traces[i]
            defended = apply_defense(original, config.defense, int(rng.integers(2 ** 32)), target)
            before, after = original.stats(), defended.stats()
            overheads.append(_percent_change(after.total_bytes, before.total_bytes))
            delays.append(_percent_change(after.duration_ms, before.duration_ms))
            if position < n_train:
                train_set.append((original if config.train_on_undefended else defended, site_id))
            else:
                test_set.append((defended, site_id))

    model = train(config.classifier, train_set, seed=trial_seed)
    acc = accuracy(model, test_set)
    return TrialResult(
        seed=trial_seed,
        accuracy=acc,
        overhead_percent=float(np.mean(overheads)),
        delay_percent=float(np.mean(delays)),
        correct=int(round(acc * len(test_set))),
        total=len(test_set),
    )


def trial_seeds(master_seed: int, trials: int) -> List[int]:
    """ Independent per-trial seeds derived from ``master_seed`` """
    return [int(s.generate_state(1)[0]) for s in np.random.SeedSequence(master_seed).spawn(trials)]


def run_experiment(config: ExperimentConfig, dataset: Optional[Dataset] = None,
                   progress: bool = False) -> ExperimentReport:
    """
    Runs ``config.trials`` trials, concurrently up to :func:`wfbench.num_threads`.

    Results are folded in trial order, so the report depends on the master
    seed only.
    """
    if dataset is None:
        dataset = config.dataset.load()
    targets = _Targets(config, dataset)
    seeds = trial_seeds(config.seed, config.trials)
    workers = max(1, min(num_threads(), config.trials))
    logger.info('running %d trials of %s against %s with %d workers',
                config.trials, config.label, config.classifier.value, workers)
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = executor.map(lambda s: run_trial(config, s, dataset, targets), seeds)
        results = tuple(tqdm(futures, total=config.trials, desc=config.label, disable=not progress))
    report = ExperimentReport(config, results)
    logger.info('%s: accuracy %.4f +- %.4f, overhead %.2f%%', config.label,
                report.accuracy[0], report.accuracy[1], report.overhead[0])
    return report


def _fmt(value: float) -> str:
    return '{:.4f}'.format(value)


def emit_report(reports: Sequence[ExperimentReport], path):
    """
    Writes one CSV row per report.

    Accuracy, overhead and delay are in percent with 4 decimals.
    """
    with open(str(path), 'w', newline='') as fp:
        w = csv.writer(fp)
        w.writerow(REPORT_HEADER)
        for r in reports:
            acc_mean, acc_std = r.accuracy
            ov_mean, ov_std = r.overhead
            delay_mean, delay_std = r.delay
            w.writerow([
                r.config.label, r.config.defense.label(), _fmt(ov_mean),
                _fmt(100 * acc_mean), _fmt(100 * acc_std),
                _fmt(ov_std), _fmt(delay_mean), _fmt(delay_std),
            ])


def read_report(path) -> List[dict]:
    """ Rows of a report written by :func:`emit_report`, numbers as floats """
    with open(str(path), newline='') as fp:
        rows = list(csv.DictReader(fp))
    if rows and set(rows[0]) != set(REPORT_HEADER):
        raise ValueError('{} is not a report file'.format(path))
    for row in rows:
        for key in REPORT_HEADER[2:]:
            row[key] = float(row[key])
    return rows


def write_trend(reports: Sequence[ExperimentReport], path):
    """
    Writes ``D, overhead, accuracy`` rows, ordered by ``D``, for plotting a
    tuning-factor sweep. Every report must come from a countermeasure with a
    ``d`` parameter.
    """
    points = []
    for r in reports:
        if 'd' not in r.config.defense.parameters:
            raise ValueError('{} has no d parameter to plot against'.format(r.config.label))
        points.append((r.config.defense['d'], r.overhead[0], 100 * r.accuracy[0]))
    with open(str(path), 'w', newline='') as fp:
        w = csv.writer(fp)
        w.writerow(TREND_HEADER)
        for d, ov, acc in sorted(points, key=lambda p: p[0]):
            w.writerow(['{:g}'.format(d), _fmt(ov), _fmt(acc)])


_EXPERIMENT_KEYS = {
    'k': int, 't_train': int, 't_test': int, 'trials': int, 'seed': int,
    'classifier': str, 'm': int, 'n_clusters': int, 'algorithm': str,
    'train_on_undefended': 'bool', 'designation': str,
}
_DATASET_KEYS = {'dataset': 'path', 'synth_sites': 'synth_sites', 'synth_traces': 'synth_traces',
                 'synth_seed': 'synth_seed'}


def load_experiment_config(path) -> List[ExperimentConfig]:
    """
    Reads an INI experiment file.

    The ``[experiment]`` section holds the shared settings; each
    ``[defense:<label>]`` section adds one configuration with a ``kind`` and
    that kind's parameters. Without defense sections the file describes a
    single undefended run.
    """
    parser = configparser.ConfigParser()
    parser.optionxform = str
    try:
        if not parser.read(str(path)):
            raise ConfigError('cannot read experiment file {}'.format(path))
    except configparser.Error as e:
        raise ConfigError('malformed experiment file {}: {}'.format(path, e)) from None
    if not parser.has_section('experiment'):
        raise ConfigError('{} has no [experiment] section'.format(path))
    section = parser['experiment']

    shared, source = {}, {}
    try:
        for key in section:
            if key in _EXPERIMENT_KEYS:
                kind = _EXPERIMENT_KEYS[key]
                shared[key] = section.getboolean(key) if kind == 'bool' else kind(section[key])
            elif key in _DATASET_KEYS:
                value = section[key]
                source[_DATASET_KEYS[key]] = value if key == 'dataset' else int(value)
            else:
                raise ConfigError('unknown experiment setting {!r}'.format(key))
        shared['dataset'] = DatasetSource(**source)

        defenses = []
        for name in parser.sections():
            if not name.startswith('defense:'):
                continue
            params = dict(parser[name])
            kind = params.pop('kind', None)
            if kind is None:
                raise ConfigError('section [{}] has no kind'.format(name))
            defenses.append((name[len('defense:'):].strip(), DefenseConfig(kind, params)))
        if not defenses:
            defenses = [('', DefenseConfig(DefenseKind.NONE))]
        return [ExperimentConfig(defense=d, label=label, **shared) for label, d in defenses]
    except ConfigError:
        raise
    except ValueError as e:
        raise ConfigError('invalid experiment file {}: {}'.format(path, e)) from None
