"""
Medoid-anchored clustering of candidate slice vectors.

.. currentmodule:: wfbench.tools.clustering

Three schemes are available, all working from a precomputed
:class:`DistanceMatrix`:

.. autosummary::
    :toctree: generated/

    pam
    agnes
    diana
    cluster

and the helpers

.. autosummary::
    :toctree: generated/

    pairwise_distances
    cluster_distance_matrix
    assign_to_medoids
    total_cost
    read_clustering

All three are deterministic. Clusters are numbered by ascending medoid index
for :func:`pam` and by ascending lowest member index for :func:`agnes` and
:func:`diana`. The medoid of a hierarchical cluster is the member with the
smallest summed distance to the rest of the cluster.
"""
import enum
from dataclasses import dataclass
from typing import List, Optional, Sequence, Tuple

import numba
import numpy as np
import scipy.spatial.distance as spd

import wfbench as _wf
from ..io import write_json_file, read_json_file


class Algorithm(enum.Enum):
    PAM = 'pam'
    AGNES = 'agnes'
    DIANA = 'diana'


@dataclass(frozen=True)
class DistanceMatrix:
    """ A symmetric, non-negative ``n x n`` matrix with a zero diagonal. """
    d: np.ndarray

    def __post_init__(self):
        d = np.array(self.d, dtype=np.float64)
        if d.ndim != 2 or d.shape[0] != d.shape[1]:
            raise ValueError('distance matrix must be square')
        if not np.allclose(d, d.T) or np.any(np.diag(d) != 0) or np.any(d < 0):
            raise ValueError('distance matrix must be symmetric, non-negative and zero on the diagonal')
        d.setflags(write=False)
        object.__setattr__(self, 'd', d)

    @property
    def n(self) -> int:
        return self.d.shape[0]


@dataclass(frozen=True)
class Clustering:
    """ A partition of ``n`` items into ``n_clusters`` medoid-anchored clusters.

    Parameters
    ----------
    algorithm : Algorithm
    n_clusters : int
    assignment : np.ndarray
        Cluster index of every item.
    medoids : Tuple[int, ...]
        Item index of the medoid of each cluster.
    labels : Tuple[str, ...], optional
        Site id of every item.
    cost_history : Tuple[float, ...]
        Total cost after the BUILD phase and after every accepted swap (PAM only).
    """
    algorithm: Algorithm
    n_clusters: int
    assignment: np.ndarray
    medoids: Tuple[int, ...]
    labels: Optional[Tuple[str, ...]] = None
    cost_history: Tuple[float, ...] = ()

    def __post_init__(self):
        assignment = np.array(self.assignment, dtype=np.int64)
        assignment.setflags(write=False)
        object.__setattr__(self, 'assignment', assignment)
        object.__setattr__(self, 'medoids', tuple(int(m) for m in self.medoids))
        if self.labels is not None:
            object.__setattr__(self, 'labels', tuple(self.labels))
            if len(self.labels) != len(assignment):
                raise ValueError('one label per item is required')
        if len(self.medoids) != self.n_clusters:
            raise ValueError('one medoid per cluster is required')
        counts = np.bincount(assignment, minlength=self.n_clusters)
        if len(counts) != self.n_clusters or np.any(counts == 0):
            raise ValueError('every cluster must be non-empty')
        for c, m in enumerate(self.medoids):
            if assignment[m] != c:
                raise ValueError('medoid {} is not a member of cluster {}'.format(m, c))

    @property
    def n(self) -> int:
        return len(self.assignment)

    def members(self, c: int) -> np.ndarray:
        return np.flatnonzero(self.assignment == c)

    def cluster_of(self, label: str) -> int:
        return int(self.assignment[self.labels.index(label)])

    def save(self, file_name):
        """ Writes the clustering as a json file mapping site id to cluster """
        labels = self.labels if self.labels is not None else tuple(str(i) for i in range(self.n))
        write_json_file(file_name, 'clustering', {
            'algorithm': self.algorithm.value,
            'n_clusters': self.n_clusters,
            'labels': list(labels),
            'sites': {s: int(c) for s, c in zip(labels, self.assignment)},
            'medoids': [labels[m] for m in self.medoids],
        })


def read_clustering(file_name) -> Clustering:
    """ Reads a file written by :meth:`Clustering.save` """
    f = read_json_file(file_name, 'clustering')
    labels = tuple(f['labels'])
    return Clustering(
        algorithm=Algorithm(f['algorithm']),
        n_clusters=int(f['n_clusters']),
        assignment=np.array([f['sites'][s] for s in labels]),
        medoids=tuple(labels.index(s) for s in f['medoids']),
        labels=labels,
    )


@dataclass(frozen=True)
class ClusterDistanceMatrix:
    """ For each cluster, the other clusters from farthest to nearest.

    ``order[i][j - 1]`` is the ``j``-th farthest cluster from cluster ``i``.
    """
    order: Tuple[Tuple[int, ...], ...]
    distances: np.ndarray

    def farthest(self, i: int, j: int) -> int:
        """ The ``j``-th farthest cluster from ``i`` (1-indexed) """
        return self.order[i][j - 1]


def pairwise_distances(vectors) -> DistanceMatrix:
    """ Euclidean distances between equal-length vectors """
    try:
        X = np.array(vectors, dtype=np.float64)
    except ValueError:
        raise ValueError('vectors have mismatched dimensions') from None
    if X.ndim != 2:
        raise ValueError('vectors have mismatched dimensions')
    if len(X) == 0:
        return DistanceMatrix(np.zeros((0, 0)))
    return DistanceMatrix(spd.squareform(spd.pdist(X, 'euclidean'), checks=False))


def total_cost(dm: DistanceMatrix, medoids: Sequence[int]) -> float:
    """ Sum over items of the distance to the nearest medoid """
    return float(dm.d[list(medoids)].min(axis=0).sum())


def assign_to_medoids(dm: DistanceMatrix, medoids: Sequence[int]) -> np.ndarray:
    """
    Assigns each item to its nearest medoid; ties go to the lower cluster index
    and every medoid is assigned to its own cluster.
    """
    medoids = list(medoids)
    labels = np.argmin(dm.d[medoids], axis=0)
    labels[medoids] = np.arange(len(medoids))
    return labels


@numba.njit
def _pam_build(d, k):
    n = d.shape[0]
    is_medoid = np.zeros(n, dtype=np.bool_)
    first = np.argmin(d.sum(axis=1))
    is_medoid[first] = True
    nearest = d[first].copy()
    for _ in range(1, k):
        best_gain = -1.0
        best = -1
        for c in range(n):
            if is_medoid[c]:
                continue
            gain = 0.0
            for j in range(n):
                delta = nearest[j] - d[j, c]
                if delta > 0:
                    gain += delta
            if gain > best_gain:
                best_gain = gain
                best = c
        is_medoid[best] = True
        for j in range(n):
            if d[j, best] < nearest[j]:
                nearest[j] = d[j, best]
    return np.flatnonzero(is_medoid)


@numba.njit(parallel=_wf.NUMBA_PARALLEL)
def _pam_swap_deltas(d, medoids):
    """ Change in total cost for replacing medoid slot ``i`` by item ``h`` """
    n = d.shape[0]
    k = medoids.shape[0]
    near = np.empty(n)
    second = np.empty(n)
    slot = np.empty(n, dtype=np.int64)
    for j in range(n):
        near[j] = np.inf
        second[j] = np.inf
        slot[j] = -1
        for i in range(k):
            v = d[j, medoids[i]]
            if v < near[j]:
                second[j] = near[j]
                near[j] = v
                slot[j] = i
            elif v < second[j]:
                second[j] = v
    deltas = np.full((k, n), np.inf)
    for i in numba.prange(k):
        for h in range(n):
            is_medoid = False
            for ii in range(k):
                if medoids[ii] == h:
                    is_medoid = True
            if is_medoid:
                continue
            total = 0.0
            for j in range(n):
                dh = d[j, h]
                if slot[j] == i:
                    total += min(dh, second[j]) - near[j]
                else:
                    total += min(dh, near[j]) - near[j]
            deltas[i, h] = total
    return deltas


def _check_k(k, n, lo, hi, name):
    if not lo <= k <= hi:
        raise ValueError('{} needs {} <= k <= {} for {} items, got k={}'.format(name, lo, hi, n, k))


def pam(dm: DistanceMatrix, k: int, seed: int = 0, labels=None) -> Clustering:
    """
    Partitioning around medoids.

    A greedy BUILD phase picks ``k`` medoids minimizing the total cost, then
    the SWAP phase repeatedly applies the medoid/non-medoid exchange with the
    largest cost decrease until no exchange decreases it. ``seed`` is only
    used to choose between exactly tied best swaps.

    Parameters
    ----------
    dm : DistanceMatrix
    k : int
        ``2 <= k < n``.
    seed : int
    labels : Sequence[str], optional
        Site id of every item, carried into the result.
    """
    n = dm.n
    _check_k(k, n, 2, n - 1, 'PAM')
    eps = _wf.eps()
    rng = np.random.default_rng(seed)
    medoids = _pam_build(dm.d, k).astype(np.int64)
    history = [total_cost(dm, medoids)]
    while True:
        deltas = _pam_swap_deltas(dm.d, medoids)
        best = deltas.min()
        if not best < -eps:
            break
        ties = np.argwhere(deltas <= best + eps)
        slot, h = ties[rng.integers(len(ties))] if len(ties) > 1 else ties[0]
        medoids[slot] = h
        history.append(total_cost(dm, medoids))
    medoids = np.sort(medoids)
    return Clustering(Algorithm.PAM, k, assign_to_medoids(dm, medoids), tuple(medoids),
                      labels, tuple(history))


def _medoid_of(d: np.ndarray, members: Sequence[int]) -> int:
    members = list(members)
    return members[int(np.argmin(d[np.ix_(members, members)].sum(axis=1)))]


def _from_groups(algorithm, d, groups: List[List[int]], labels) -> Clustering:
    groups = sorted((sorted(g) for g in groups), key=lambda g: g[0])
    assignment = np.empty(d.shape[0], dtype=np.int64)
    for c, g in enumerate(groups):
        assignment[g] = c
    medoids = tuple(_medoid_of(d, g) for g in groups)
    return Clustering(algorithm, len(groups), assignment, medoids, labels)


def agnes(dm: DistanceMatrix, k: int, labels=None) -> Clustering:
    """
    Agglomerative nesting with average linkage.

    Starts from singletons and merges the closest pair of clusters until
    ``k`` remain. A cluster is identified by its lowest member index; among
    equally close pairs the lexicographically smallest pair of identifiers is
    merged first.
    """
    n = dm.n
    _check_k(k, n, 1, n, 'AGNES')
    D = dm.d.copy()
    np.fill_diagonal(D, np.inf)
    size = np.ones(n)
    groups = {i: [i] for i in range(n)}
    while len(groups) > k:
        flat = int(np.argmin(D))
        i, j = divmod(flat, n)
        i, j = min(i, j), max(i, j)
        merged = (size[i] * D[i] + size[j] * D[j]) / (size[i] + size[j])
        D[i, :] = merged
        D[:, i] = merged
        D[i, i] = np.inf
        D[j, :] = np.inf
        D[:, j] = np.inf
        size[i] += size[j]
        groups[i].extend(groups.pop(j))
    return _from_groups(Algorithm.AGNES, dm.d, list(groups.values()), labels)


def _split(d: np.ndarray, members: List[int]) -> Tuple[List[int], List[int]]:
    eps = _wf.eps()
    sub = d[np.ix_(members, members)]
    avg = sub.sum(axis=1) / (len(members) - 1)
    splinter = [int(np.argmax(avg))]
    rest = [i for i in range(len(members)) if i != splinter[0]]
    while len(rest) > 1:
        within = sub[np.ix_(rest, rest)].sum(axis=1) / (len(rest) - 1)
        towards = sub[np.ix_(rest, splinter)].mean(axis=1)
        diff = within - towards
        best = int(np.argmax(diff))
        if not diff[best] > eps:
            break
        splinter.append(rest.pop(best))
    return [members[i] for i in rest], [members[i] for i in splinter]


def diana(dm: DistanceMatrix, k: int, labels=None) -> Clustering:
    """
    Divisive analysis.

    Repeatedly splits the cluster of largest diameter: the member with the
    highest average dissimilarity seeds a splinter group, and members that
    are on average closer to the splinter group than to the rest move over
    one at a time until none is. Ties go to the lowest index.
    """
    n = dm.n
    _check_k(k, n, 1, n, 'DIANA')
    d = dm.d
    groups = [list(range(n))]
    while len(groups) < k:
        diameters = [d[np.ix_(g, g)].max() if len(g) > 1 else -1.0 for g in groups]
        target = int(np.argmax(diameters))
        g = groups.pop(target)
        a, b = _split(d, g)
        groups.extend([a, b])
        groups.sort(key=lambda g: min(g))
    return _from_groups(Algorithm.DIANA, d, groups, labels)


def cluster(dm: DistanceMatrix, algorithm, k: int, seed: int = 0, labels=None) -> Clustering:
    """ Runs the named clustering scheme """
    algorithm = Algorithm(algorithm)
    if algorithm is Algorithm.PAM:
        return pam(dm, k, seed, labels)
    if algorithm is Algorithm.AGNES:
        return agnes(dm, k, labels)
    return diana(dm, k, labels)


def cluster_distance_matrix(clustering: Clustering, dm: DistanceMatrix) -> ClusterDistanceMatrix:
    """
    Ranks, for every cluster, the other clusters by descending medoid distance.

    Equal distances are ordered by ascending cluster index.
    """
    medoids = list(clustering.medoids)
    dist = dm.d[np.ix_(medoids, medoids)]
    k = len(medoids)
    order = []
    for i in range(k):
        others = np.array([j for j in range(k) if j != i], dtype=np.int64)
        ranked = others[np.lexsort((others, -dist[i, others]))]
        order.append(tuple(int(j) for j in ranked))
    return ClusterDistanceMatrix(tuple(order), dist)
