"""
.. currentmodule:: wfbench.candidates

==============================================
candidate traces (:mod:`wfbench.candidates`)
==============================================

Each website is represented in clustering by a single candidate trace: the
trace with the lowest local outlier factor among the site's own traces, in
the slice feature space. Scoring only against the site's own traces keeps
broken or truncated visits from being picked even when they would look
ordinary next to other sites.

.. autosummary::
    :toctree: generated/

    Candidate
    CandidateSet
    select_candidates
    default_k_neighbors

"""
import warnings
from dataclasses import dataclass
from types import MappingProxyType
from typing import Mapping, Optional, Tuple

import numpy as np

from . import DataQualityWarning
from ._trace import Dataset, Trace
from .features import SliceVector, slice_features, DEFAULT_M
from .tools.lof import lof


@dataclass(frozen=True)
class Candidate:
    site_id: str
    trace: Trace
    trace_index: int
    slice_vector: SliceVector
    lof_score: float


@dataclass(frozen=True)
class CandidateSet:
    """ One :class:`Candidate` per eligible website, keyed by site id. """
    entries: Mapping[str, Candidate]

    def __post_init__(self):
        object.__setattr__(self, 'entries', MappingProxyType(dict(self.entries)))

    def site_ids(self) -> Tuple[str, ...]:
        """ Site ids in sorted order; row order of :meth:`matrix` """
        return tuple(sorted(self.entries))

    def matrix(self) -> np.ndarray:
        """ The candidates' slice vectors stacked in :meth:`site_ids` order """
        return np.array([self.entries[s].slice_vector.values for s in self.site_ids()])

    def __getitem__(self, site_id) -> Candidate:
        return self.entries[site_id]

    def __contains__(self, site_id):
        return site_id in self.entries

    def __len__(self):
        return len(self.entries)


def default_k_neighbors(n_traces: int) -> int:
    """ ``min(10, n_traces - 1)`` """
    return min(10, n_traces - 1)


def select_candidates(dataset: Dataset, m: int = DEFAULT_M,
                      k_neighbors: Optional[int] = None) -> CandidateSet:
    """
    Picks the minimum-LOF trace of every website.

    Websites with fewer than ``k_neighbors + 1`` traces are skipped with a
    :class:`~wfbench.DataQualityWarning`. Ties go to the lowest trace index.

    Parameters
    ----------
    dataset : Dataset
    m : int
        Slice count of the feature space.
    k_neighbors : int, optional
        LOF neighbourhood size; per site :func:`default_k_neighbors` if omitted.
    """
    entries = {}
    for ws in dataset:
        k = default_k_neighbors(len(ws)) if k_neighbors is None else k_neighbors
        if k < 1 or len(ws) < k + 1:
            warnings.warn('skipping website {}: {} traces are too few for LOF with k={}'.format(
                ws.site_id, len(ws), k), DataQualityWarning)
            continue
        vectors = [slice_features(t, m) for t in ws.traces]
        scores = lof(np.array([v.values for v in vectors]), k)
        best = int(np.argmin(scores))
        entries[ws.site_id] = Candidate(ws.site_id, ws.traces[best], best, vectors[best], float(scores[best]))
    if not entries:
        raise ValueError('no website has enough traces to select a candidate')
    return CandidateSet(entries)
