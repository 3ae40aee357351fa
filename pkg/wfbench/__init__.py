"""
.. currentmodule:: wfbench

========================================
wfbench (:mod:`wfbench`)
========================================

The top-level module.
Provides the packet/trace data model shared by every other module, along with
the global configuration functions.

Data model
==========

.. autosummary::
    :toctree: generated/

    Direction
    Packet
    Trace
    TraceStats
    Website
    Dataset
    Provenance
    trace_stats

Global configuration functions
==============================
These functions are used to change the global behavior of ``wfbench``.

.. autosummary::
    :toctree: generated/

    eps
    num_threads

Warnings
========

.. autosummary::
    :toctree: generated/

    DataQualityWarning

Submodules
==========

.. autosummary::
    :toctree: generated/

    io
    synth
    features
    candidates
    designator
    morph
    defenses
    attacks
    harness
    cli
    tools

"""

# Standard library imports.
import os
import warnings

# Major library imports.
import numba

from ._version import __version__  # noqa: F401
from ._trace import (  # noqa: F401
    Direction, Packet, Trace, TraceStats, Website, Dataset, Provenance,
    trace_stats, MAX_PACKET_SIZE, POOL_SIZE,
)

_eps = 1e-12            # float epsilon for score and distance ties


class DataQualityWarning(UserWarning):
    """ Emitted when input data is skipped or a parameter is reduced to fit it. """


try:
    NUMBA_DISABLE_PARALLEL = os.environ['NUMBA_DISABLE_PARALLEL']
except KeyError:
    NUMBA_PARALLEL = True
else:
    NUMBA_PARALLEL = not bool(NUMBA_DISABLE_PARALLEL)


def _threads_from_env() -> int:
    value = os.environ.get('WFBENCH_THREADS')
    if value is None:
        return os.cpu_count() or 1
    try:
        n = int(value)
        if n < 1:
            raise ValueError
    except ValueError:
        warnings.warn('WFBENCH_THREADS={!r} is not a positive integer; using 1 thread'.format(value),
                      DataQualityWarning)
        return 1
    return n


def _cap_numba(n: int):
    numba.set_num_threads(min(n, numba.config.NUMBA_NUM_THREADS))


_num_threads = _threads_from_env()
_cap_numba(_num_threads)


def eps(newEps=None):
    """ Get/Set the epsilon used to decide float ties """
    global _eps
    if newEps is not None:
        _eps = newEps
    return _eps


def num_threads(n=None):
    """ Get/Set the parallelism cap; initialised from ``WFBENCH_THREADS``

    The cap sizes the trial pool and, in the calling thread, the parallel
    numba kernels, which never exceed ``NUMBA_NUM_THREADS``.
    """
    global _num_threads
    if n is not None:
        if n < 1:
            raise ValueError('thread count must be positive')
        _num_threads = int(n)
        _cap_numba(_num_threads)
    return _num_threads
