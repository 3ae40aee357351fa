"""
.. currentmodule:: wfbench.features

=====================================
trace features (:mod:`wfbench.features`)
=====================================

Fixed-length behavioural summaries of traces, and the sparse feature maps the
attack classifiers consume.

A trace is cut into ``m`` contiguous slices by packet index, with the first
``len(trace) % m`` slices taking one extra packet. Each slice contributes the
pair ``<mean_up, mean_down>``: the mean size of its outgoing and of its
incoming packets, or 0 if the slice has none in that direction.

.. autosummary::
    :toctree: generated/

    SliceVector
    FeatureVector
    FeatureKind
    slice_bounds
    slice_features
    slice_matrix
    ll_features
    ha_features
    pa_features

"""
import enum
from collections import Counter
from dataclasses import dataclass
from typing import Hashable, Mapping, Sequence

import numpy as np

from ._trace import Trace, Direction

#: width of the packet size buckets used in :func:`pa_features`
BUCKET_WIDTH = 100

#: default slice count
DEFAULT_M = 10


class FeatureKind(enum.Enum):
    LL = 'LL'
    HA = 'HA'
    PA = 'PA'


@dataclass(frozen=True)
class SliceVector:
    """ ``2m`` slice means ordered ``<mean_up_1, mean_down_1, ..., mean_up_m, mean_down_m>`` """
    m: int
    values: np.ndarray

    def __post_init__(self):
        if self.values.shape != (2 * self.m,):
            raise ValueError('slice vector of {} slices must have {} entries'.format(self.m, 2 * self.m))
        self.values.setflags(write=False)


@dataclass(frozen=True)
class FeatureVector:
    kind: FeatureKind
    entries: Mapping[Hashable, float]

    def __len__(self):
        return len(self.entries)

    def __getitem__(self, key):
        return self.entries[key]


def slice_bounds(n: int, m: int) -> np.ndarray:
    """
    Boundaries of ``m`` slices over ``n`` items: slice ``s`` is ``[b[s], b[s+1])``.

    >>> slice_bounds(10, 3).tolist()
    [0, 4, 7, 10]
    """
    if m < 1:
        raise ValueError('slice count must be at least 1, not {}'.format(m))
    base, extra = divmod(n, m)
    lengths = np.full(m, base, dtype=np.int64)
    lengths[:extra] += 1
    return np.concatenate([[0], np.cumsum(lengths)])


def slice_features(trace: Trace, m: int) -> SliceVector:
    """
    The ``2m`` slice representation of a trace.

    Slices without packets (when ``m > len(trace)``) contribute ``(0, 0)``.
    """
    if len(trace) == 0:
        raise ValueError('cannot slice an empty trace')
    bounds = slice_bounds(len(trace), m)
    slice_of = np.repeat(np.arange(m), np.diff(bounds))
    sizes = trace.sizes.astype(np.float64)
    values = np.zeros((m, 2))
    for col, direction in enumerate((Direction.OUTGOING, Direction.INCOMING)):
        mask = trace.directions == int(direction)
        total = np.bincount(slice_of[mask], weights=sizes[mask], minlength=m)
        count = np.bincount(slice_of[mask], minlength=m)
        np.divide(total, count, out=values[:, col], where=count > 0)
    return SliceVector(m, values.reshape(-1))


def slice_matrix(traces: Sequence[Trace], m: int) -> np.ndarray:
    """ Stacks the slice vectors of several traces into an ``(n, 2m)`` array """
    return np.array([slice_features(t, m).values for t in traces]).reshape(len(traces), 2 * m)


def ll_features(trace: Trace) -> FeatureVector:
    """ Histogram of signed packet lengths, keyed by ``(direction, size)`` """
    keys, counts = np.unique(trace.directions.astype(np.int64) * trace.sizes, return_counts=True)
    entries = {(int(np.sign(k)), int(abs(k))): int(c) for k, c in zip(keys, counts)}
    return FeatureVector(FeatureKind.LL, entries)


def ha_features(trace: Trace) -> FeatureVector:
    """ :func:`ll_features` normalized to frequencies summing to 1 """
    counts = ll_features(trace).entries
    total = sum(counts.values())
    return FeatureVector(FeatureKind.HA, {k: c / total for k, c in counts.items()})


def pa_features(trace: Trace) -> FeatureVector:
    """
    Volume and packet-count markers plus 100-byte size buckets per direction.

    Scalar markers are keyed by name (``bytes_in``, ``bytes_out``,
    ``count_in``, ``count_out``, ``frac_in``, ``distinct_sizes``); buckets
    by ``(direction, floor(size / 100) * 100)``.
    """
    incoming = trace.directions == int(Direction.INCOMING)
    n = len(trace)
    entries = {
        'bytes_in': float(trace.sizes[incoming].sum()),
        'bytes_out': float(trace.sizes[~incoming].sum()),
        'count_in': float(incoming.sum()),
        'count_out': float(n - incoming.sum()),
        'frac_in': float(incoming.sum()) / n if n else 0.0,
        'distinct_sizes': float(len(np.unique(trace.sizes))),
    }
    buckets = Counter(zip(trace.directions.tolist(), (trace.sizes // BUCKET_WIDTH * BUCKET_WIDTH).tolist()))
    entries.update({k: float(v) for k, v in sorted(buckets.items())})
    return FeatureVector(FeatureKind.PA, entries)


def feature_key_order(key):
    """ Sort key putting named markers before tuple keys """
    if isinstance(key, tuple):
        return (1, key)
    return (0, (key,))
