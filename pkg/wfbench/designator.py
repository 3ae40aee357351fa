"""
.. currentmodule:: wfbench.designator

==============================================
target designation (:mod:`wfbench.designator`)
==============================================

Chooses the destination trace a source site is morphed toward.

Candidate traces are clustered once; a request carries the source site and
an importance measure ``IM``. With ``d = IM mod nClust``, ``d = 0`` picks
another site of the source's own cluster, and ``d >= 1`` picks a site of the
``d``-th farthest cluster. Larger ``d`` therefore walks from the most distant
cluster toward the nearest one. The chosen site's candidate trace is the
destination.

.. autosummary::
    :toctree: generated/

    DesignationRequest
    Designation
    designate
    designate_random
    TargetDesignator

"""
import warnings
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import DataQualityWarning
from ._trace import Trace
from .candidates import CandidateSet
from .tools.clustering import (
    Algorithm, Clustering, ClusterDistanceMatrix, cluster, cluster_distance_matrix,
    pairwise_distances,
)

#: cluster count of the reference configuration
DEFAULT_N_CLUSTERS = 10


@dataclass(frozen=True)
class DesignationRequest:
    source_site: str
    im: int
    seed: int = 0

    def __post_init__(self):
        if self.im < 0:
            raise ValueError('importance measure must be non-negative, not {}'.format(self.im))

    def effective_d(self, n_clusters: int) -> int:
        return self.im % n_clusters


@dataclass(frozen=True)
class Designation:
    """ The destination chosen for a source site.

    Cluster indices are ``-1`` for designations made without a clustering.
    """
    destination_site: str
    destination_trace: Trace
    source_cluster: int
    destination_cluster: int
    effective_d: int


def _labels(clustering: Clustering, candidates: CandidateSet):
    return clustering.labels if clustering.labels is not None else candidates.site_ids()


def designate(request: DesignationRequest, clustering: Clustering, cd: ClusterDistanceMatrix,
              candidates: CandidateSet) -> Designation:
    """
    Picks the destination for ``request.source_site``.

    When ``d = 0`` and the source is alone in its cluster, falls back to
    ``d = 1`` with a :class:`~wfbench.DataQualityWarning`.
    """
    labels = _labels(clustering, candidates)
    if request.source_site not in candidates or request.source_site not in labels:
        raise ValueError('unknown source site {!r}'.format(request.source_site))
    source_index = labels.index(request.source_site)
    source_cluster = int(clustering.assignment[source_index])
    d = request.effective_d(clustering.n_clusters)

    if d == 0:
        destination_cluster = source_cluster
        members = [i for i in clustering.members(source_cluster) if i != source_index]
        if not members:
            if clustering.n_clusters < 2:
                raise ValueError('no site other than {!r} to designate'.format(request.source_site))
            warnings.warn('{} is alone in its cluster; using the farthest cluster instead'.format(
                request.source_site), DataQualityWarning)
            d = 1
    if d != 0:
        destination_cluster = cd.farthest(source_cluster, d)
        members = list(clustering.members(destination_cluster))

    rng = np.random.default_rng(request.seed)
    chosen = labels[members[int(rng.integers(len(members)))]]
    return Designation(chosen, candidates[chosen].trace, source_cluster, int(destination_cluster), d)


def designate_random(request: DesignationRequest, candidates: CandidateSet) -> Designation:
    """
    Picks a uniformly random other site, ignoring ``IM``.

    This is the random target choice of plain traffic morphing, kept for
    comparison runs.
    """
    others = [s for s in candidates.site_ids() if s != request.source_site]
    if not others:
        raise ValueError('no site other than {!r} to designate'.format(request.source_site))
    rng = np.random.default_rng(request.seed)
    chosen = others[int(rng.integers(len(others)))]
    return Designation(chosen, candidates[chosen].trace, -1, -1, -1)


class TargetDesignator(object):
    """ Clusters a candidate set once and serves designation requests against it.

    Parameters
    ----------
    candidates : CandidateSet
    algorithm : Algorithm or str
    n_clusters : int
        Capped at ``len(candidates) - 1`` for PAM and at ``len(candidates)`` otherwise.
    seed : int
        Tie-break seed of the clustering.
    """
    def __init__(self, candidates: CandidateSet, algorithm=Algorithm.PAM,
                 n_clusters: int = DEFAULT_N_CLUSTERS, seed: int = 0,
                 clustering: Optional[Clustering] = None):
        self.candidates = candidates
        self.distances = pairwise_distances(candidates.matrix())
        if clustering is None:
            algorithm = Algorithm(algorithm)
            cap = len(candidates) - 1 if algorithm is Algorithm.PAM else len(candidates)
            k = min(n_clusters, cap)
            if k < n_clusters:
                warnings.warn('only {} candidates; using {} clusters instead of {}'.format(
                    len(candidates), k, n_clusters), DataQualityWarning)
            clustering = cluster(self.distances, algorithm, k, seed, labels=candidates.site_ids())
        self.clustering = clustering
        self.cd = cluster_distance_matrix(clustering, self.distances)

    def designate(self, source_site: str, im: int, seed: int = 0) -> Designation:
        return designate(DesignationRequest(source_site, im, seed), self.clustering, self.cd, self.candidates)

    def designate_random(self, source_site: str, seed: int = 0) -> Designation:
        return designate_random(DesignationRequest(source_site, 0, seed), self.candidates)
