"""
Cluster validity indexes.

.. currentmodule:: wfbench.tools.validity

Internal indexes judge one clustering by its compactness and separation:

.. autosummary::
    :toctree: generated/

    internal_indexes
    dunn
    calinski_harabasz
    silhouette
    davies_bouldin
    connectivity

Stability indexes recluster the data once per feature column with that
column removed, and measure how much the partition moves:

.. autosummary::
    :toctree: generated/

    stability_indexes
    column_fom

Both halves are combined by :func:`index_report`, and :func:`compare_schemes`
builds the algorithm-by-cluster-count table written by
:func:`write_index_report`.

Conventions: a singleton cluster has silhouette 0, as does every item of a
cluster whose points are all at distance 0 from everything; Dunn is
``inf`` when every cluster has zero diameter and 0 when there is a single
cluster.
"""
import csv
import math
from dataclasses import dataclass, replace
from typing import Iterable, List, Sequence

import numpy as np

from .clustering import (
    Algorithm, Clustering, DistanceMatrix, cluster, pairwise_distances,
)

#: the report columns, in table order
INDEX_COLUMNS = ('dunn', 'ch', 'silhouette', 'db', 'connectivity', 'apn', 'ad', 'adm', 'fom')

#: table header matching :data:`INDEX_COLUMNS`
INDEX_HEADER = ('Scheme', 'Dunn', 'CH', 'Silhouette', 'DB', 'Connectivity', 'APN', 'AD', 'ADM', 'FOM')

#: neighbourhood size of :func:`connectivity`
DEFAULT_L_NEIGHBORS = 10

_nan = float('nan')


@dataclass(frozen=True)
class IndexReport:
    """ Validity indexes of one clustering scheme; unset entries are ``nan``. """
    scheme: str
    dunn: float = _nan
    ch: float = _nan
    silhouette: float = _nan
    db: float = _nan
    connectivity: float = _nan
    apn: float = _nan
    ad: float = _nan
    adm: float = _nan
    fom: float = _nan

    def merge(self, other: 'IndexReport') -> 'IndexReport':
        """ Fills this report's unset entries from ``other`` """
        return replace(self, **{
            c: getattr(other, c) for c in INDEX_COLUMNS if math.isnan(getattr(self, c))
        })

    def row(self) -> tuple:
        return (self.scheme,) + tuple(getattr(self, c) for c in INDEX_COLUMNS)


def scheme_label(algorithm, k: int) -> str:
    """ ``PAM10``, ``AGNES8``, ... """
    return '{}{}'.format(Algorithm(algorithm).name, k)


def _centroids(X: np.ndarray, labels: np.ndarray, k: int) -> np.ndarray:
    return np.array([X[labels == c].mean(axis=0) for c in range(k)])


def dunn(dm: DistanceMatrix, labels: np.ndarray) -> float:
    """ Smallest between-cluster distance over largest cluster diameter """
    d = dm.d
    same = labels[:, None] == labels[None, :]
    if same.all():
        return 0.0
    inter = d[~same].min()
    diameter = d[same].max()
    if diameter == 0:
        return math.inf
    return float(inter / diameter)


def calinski_harabasz(X: np.ndarray, labels: np.ndarray) -> float:
    """ Between-cluster over within-cluster dispersion, each per degree of freedom """
    n = len(X)
    k = int(labels.max()) + 1
    if k < 2:
        return 0.0
    centroids = _centroids(X, labels, k)
    counts = np.bincount(labels, minlength=k)
    between = float((counts * ((centroids - X.mean(axis=0)) ** 2).sum(axis=1)).sum())
    within = float(((X - centroids[labels]) ** 2).sum())
    if within == 0 or n == k:
        return math.inf if between > 0 else 0.0
    return (between / (k - 1)) / (within / (n - k))


def silhouette_samples(dm: DistanceMatrix, labels: np.ndarray) -> np.ndarray:
    d = dm.d
    n = len(labels)
    k = int(labels.max()) + 1
    if k < 2:
        return np.zeros(n)
    onehot = np.zeros((n, k))
    onehot[np.arange(n), labels] = 1
    counts = onehot.sum(axis=0)
    sums = d @ onehot
    own = counts[labels]
    a = np.divide(sums[np.arange(n), labels], own - 1, out=np.zeros(n), where=own > 1)
    with np.errstate(divide='ignore', invalid='ignore'):
        mean_to = sums / counts
    mean_to[np.arange(n), labels] = np.inf
    b = mean_to.min(axis=1)
    top = np.maximum(a, b)
    s = np.divide(b - a, top, out=np.zeros(n), where=(top > 0) & np.isfinite(top))
    s[own == 1] = 0.0
    return s


def silhouette(dm: DistanceMatrix, labels: np.ndarray) -> float:
    """ Mean over items of ``(b - a) / max(a, b)`` """
    return float(silhouette_samples(dm, labels).mean())


def davies_bouldin(X: np.ndarray, labels: np.ndarray) -> float:
    """ Mean over clusters of the worst scatter-to-separation ratio against another cluster """
    k = int(labels.max()) + 1
    if k < 2:
        return 0.0
    centroids = _centroids(X, labels, k)
    scatter = np.array([np.linalg.norm(X[labels == c] - centroids[c], axis=1).mean() for c in range(k)])
    worst = np.zeros(k)
    for i in range(k):
        for j in range(k):
            if i == j:
                continue
            sep = np.linalg.norm(centroids[i] - centroids[j])
            num = scatter[i] + scatter[j]
            ratio = num / sep if sep > 0 else (math.inf if num > 0 else 0.0)
            worst[i] = max(worst[i], ratio)
    return float(worst.mean())


def connectivity(dm: DistanceMatrix, labels: np.ndarray, l_neighbors: int = DEFAULT_L_NEIGHBORS) -> float:
    """
    Sum over items of ``1/j`` for each ``j``-th nearest neighbour placed in another cluster.

    Neighbour ties are ordered by index; ``l_neighbors`` is capped at ``n - 1``.
    """
    if l_neighbors < 1:
        raise ValueError('l_neighbors must be positive')
    n = len(labels)
    l_neighbors = min(l_neighbors, n - 1)
    if l_neighbors < 1:
        return 0.0
    d = dm.d.copy()
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind='stable')[:, :l_neighbors]
    foreign = labels[order] != labels[:, None]
    return float((foreign / np.arange(1, l_neighbors + 1)).sum())


def internal_indexes(clustering: Clustering, vectors, dm: DistanceMatrix,
                     l_neighbors: int = DEFAULT_L_NEIGHBORS) -> IndexReport:
    """ Dunn, Calinski-Harabasz, silhouette, Davies-Bouldin and connectivity """
    X = np.asarray(vectors, dtype=np.float64)
    labels = np.asarray(clustering.assignment)
    return IndexReport(
        scheme=scheme_label(clustering.algorithm, clustering.n_clusters),
        dunn=dunn(dm, labels),
        ch=calinski_harabasz(X, labels),
        silhouette=silhouette(dm, labels),
        db=davies_bouldin(X, labels),
        connectivity=connectivity(dm, labels, l_neighbors),
    )


def column_fom(column: np.ndarray, labels: np.ndarray) -> float:
    """
    Root mean squared deviation of ``column`` from its cluster means under ``labels``.
    """
    column = np.asarray(column, dtype=np.float64)
    k = int(labels.max()) + 1
    means = np.bincount(labels, weights=column, minlength=k) / np.bincount(labels, minlength=k)
    return float(np.sqrt(((column - means[labels]) ** 2).mean()))


def _co_membership(full: np.ndarray, reduced: np.ndarray) -> np.ndarray:
    """ ``overlap[i] = |C_full(i) & C_reduced(i)|`` """
    table = np.zeros((full.max() + 1, reduced.max() + 1))
    np.add.at(table, (full, reduced), 1)
    return table[full, reduced]


def stability_indexes(algorithm, vectors, k: int, seed: int = 0) -> IndexReport:
    """
    APN, AD, ADM and FOM of a clustering scheme.

    For each column the data is reclustered without it. Per item ``i``, with
    ``C(i)`` its cluster on the full data and ``C'(i)`` on the reduced data:

    * APN averages ``1 - |C(i) & C'(i)| / |C(i)|``,
    * AD averages the mean full-data distance between members of ``C(i)``
      and of ``C'(i)``,
    * ADM averages the distance between the full-data centroids of ``C(i)``
      and ``C'(i)``,
    * FOM averages, over columns, :func:`column_fom` of the removed column
      under the reduced clustering.
    """
    X = np.asarray(vectors, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] < 2:
        raise ValueError('stability indexes need at least 2 feature columns')
    algorithm = Algorithm(algorithm)
    n, dims = X.shape
    dm = pairwise_distances(X)
    full = cluster(dm, algorithm, k, seed).assignment
    full_size = np.bincount(full)
    full_centroids = _centroids(X, full, int(full.max()) + 1)

    apn = ad = adm = fom = 0.0
    for c in range(dims):
        Xc = np.delete(X, c, axis=1)
        reduced = cluster(pairwise_distances(Xc), algorithm, k, seed).assignment
        overlap = _co_membership(full, reduced)
        apn += float((1 - overlap / full_size[full]).mean())

        onehot_full = np.eye(full.max() + 1)[full]
        onehot_red = np.eye(reduced.max() + 1)[reduced]
        # summed distance between every full cluster and every reduced cluster
        block = onehot_full.T @ dm.d @ onehot_red
        red_size = onehot_red.sum(axis=0)
        ad += float((block[full, reduced] / (full_size[full] * red_size[reduced])).mean())

        red_centroids = _centroids(X, reduced, int(reduced.max()) + 1)
        adm += float(np.linalg.norm(full_centroids[full] - red_centroids[reduced], axis=1).mean())

        fom += column_fom(X[:, c], reduced)

    return IndexReport(
        scheme=scheme_label(algorithm, k),
        apn=apn / dims, ad=ad / dims, adm=adm / dims, fom=fom / dims,
    )


def index_report(algorithm, vectors, k: int, seed: int = 0,
                 l_neighbors: int = DEFAULT_L_NEIGHBORS) -> IndexReport:
    """ All nine indexes of one scheme """
    X = np.asarray(vectors, dtype=np.float64)
    dm = pairwise_distances(X)
    clustering = cluster(dm, algorithm, k, seed)
    internal = internal_indexes(clustering, X, dm, l_neighbors)
    return internal.merge(stability_indexes(algorithm, X, k, seed))


def compare_schemes(vectors, algorithms: Iterable = tuple(Algorithm), ks: Sequence[int] = (8, 9, 10),
                    seed: int = 0, l_neighbors: int = DEFAULT_L_NEIGHBORS) -> List[IndexReport]:
    """ One :func:`index_report` per (algorithm, cluster count), algorithm-major """
    return [
        index_report(a, vectors, k, seed, l_neighbors)
        for a in algorithms
        for k in ks
    ]


def write_index_report(file_name, reports: Iterable[IndexReport]):
    """ Writes reports as CSV, one row per scheme """
    with open(str(file_name), 'w', newline='') as fp:
        w = csv.writer(fp)
        w.writerow(INDEX_HEADER)
        for r in reports:
            w.writerow([r.scheme] + ['{:.6g}'.format(v) for v in r.row()[1:]])
