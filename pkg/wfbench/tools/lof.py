"""
Local outlier factor scores over small point sets.

.. currentmodule:: wfbench.tools.lof

.. autofunction:: lof

.. autofunction:: lof_from_distances

Neighbourhoods hold exactly ``k`` points: distance ties are broken by the
lower index, and duplicates of a point count as its neighbours. A point
whose local reachability density is infinite (it has ``k`` duplicates) gets
a score of 1 against infinitely dense neighbours and 0 against finite ones.
A point of finite density among infinitely dense neighbours scores ``inf``:
the score is left uncapped so that such a point always ranks as the
strongest outlier and is never taken as a minimum.
"""
import numpy as np
import scipy.spatial.distance as spd


def _neighbourhoods(dm: np.ndarray, k: int):
    n = dm.shape[0]
    d = dm.astype(np.float64, copy=True)
    np.fill_diagonal(d, np.inf)
    order = np.argsort(d, axis=1, kind='stable')[:, :k]
    rows = np.arange(n)[:, None]
    return order, d[rows, order]


def lof_from_distances(dm: np.ndarray, k_neighbors: int) -> np.ndarray:
    """
    LOF scores given a full symmetric distance matrix.
    """
    dm = np.asarray(dm, dtype=np.float64)
    n = dm.shape[0]
    if dm.shape != (n, n):
        raise ValueError('distance matrix must be square')
    if k_neighbors < 1:
        raise ValueError('k_neighbors must be positive, not {}'.format(k_neighbors))
    if n < k_neighbors + 1:
        raise ValueError('LOF with k={} needs at least {} points, got {}'.format(
            k_neighbors, k_neighbors + 1, n))

    order, dist = _neighbourhoods(dm, k_neighbors)
    k_distance = dist[:, -1]
    reach = np.maximum(k_distance[order], dist)
    mean_reach = reach.mean(axis=1)
    with np.errstate(divide='ignore'):
        lrd = 1.0 / mean_reach

    lrd_p = lrd[:, None]
    lrd_o = lrd[order]
    p_inf = np.isinf(lrd_p)
    o_inf = np.isinf(lrd_o)
    with np.errstate(divide='ignore', invalid='ignore'):
        ratio = np.where(
            p_inf,
            np.where(o_inf, 1.0, 0.0),
            lrd_o / np.where(p_inf, 1.0, lrd_p),
        )
    return ratio.mean(axis=1)


def lof(points, k_neighbors: int) -> np.ndarray:
    """
    Local outlier factor of each point among ``points`` (Euclidean).

    Scores are close to 1 for points as dense as their neighbourhood and
    grow above 1 for outliers.

    Parameters
    ----------
    points : array_like, shape (n, dim)
    k_neighbors : int
        Neighbourhood size; ``n >= k_neighbors + 1``.
    """
    X = np.asarray(points, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError('points must be a sequence of equal-length vectors')
    if len(X) < k_neighbors + 1:
        raise ValueError('LOF with k={} needs at least {} points, got {}'.format(
            k_neighbors, k_neighbors + 1, len(X)))
    return lof_from_distances(spd.squareform(spd.pdist(X)), k_neighbors)
