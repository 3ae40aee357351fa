import csv
import math

import numpy as np
import pytest

from wfbench.tools.clustering import Algorithm, Clustering, pairwise_distances, pam
from wfbench.tools.validity import (
    INDEX_HEADER, IndexReport, scheme_label,
    dunn, calinski_harabasz, silhouette, silhouette_samples, davies_bouldin, connectivity,
    internal_indexes, column_fom, stability_indexes, index_report, compare_schemes, write_index_report,
)


def random_instance(seed):
    rng = np.random.default_rng(seed)
    n = int(rng.integers(4, 13))
    k = int(rng.integers(2, min(4, n - 1) + 1))
    X = rng.normal(size=(n, 3))
    labels = np.concatenate([np.arange(k), rng.integers(0, k, n - k)])
    rng.shuffle(labels)
    return X, labels


def dist(a, b):
    return math.sqrt(sum((x - y) ** 2 for x, y in zip(a, b)))


def brute_dunn(X, labels):
    n = len(X)
    inter = min(dist(X[i], X[j]) for i in range(n) for j in range(n) if labels[i] != labels[j])
    diam = max(dist(X[i], X[j]) for i in range(n) for j in range(n) if labels[i] == labels[j])
    return inter / diam


def centroid(X, labels, c):
    pts = [X[i] for i in range(len(X)) if labels[i] == c]
    return [sum(p[d] for p in pts) / len(pts) for d in range(len(X[0]))]


def brute_ch(X, labels):
    n, k = len(X), max(labels) + 1
    overall = [sum(x[d] for x in X) / n for d in range(len(X[0]))]
    between = sum(list(labels).count(c) * dist(centroid(X, labels, c), overall) ** 2 for c in range(k))
    within = sum(dist(X[i], centroid(X, labels, labels[i])) ** 2 for i in range(n))
    return (between / (k - 1)) / (within / (n - k))


def brute_silhouette(X, labels):
    n = len(X)
    total = 0.0
    for i in range(n):
        own = [j for j in range(n) if labels[j] == labels[i] and j != i]
        if not own:
            continue
        a = sum(dist(X[i], X[j]) for j in own) / len(own)
        b = min(
            sum(dist(X[i], X[j]) for j in range(n) if labels[j] == c) / list(labels).count(c)
            for c in set(labels) if c != labels[i]
        )
        total += (b - a) / max(a, b)
    return total / n


def brute_db(X, labels):
    k = max(labels) + 1
    cents = [centroid(X, labels, c) for c in range(k)]
    scatter = [
        np.mean([dist(X[i], cents[c]) for i in range(len(X)) if labels[i] == c]) for c in range(k)
    ]
    return sum(
        max((scatter[i] + scatter[j]) / dist(cents[i], cents[j]) for j in range(k) if j != i)
        for i in range(k)
    ) / k


def brute_connectivity(X, labels, L):
    n = len(X)
    total = 0.0
    for i in range(n):
        ranked = sorted((dist(X[i], X[j]), j) for j in range(n) if j != i)
        for rank, (_, j) in enumerate(ranked[:L], start=1):
            if labels[j] != labels[i]:
                total += 1 / rank
    return total


class TestInternalIndexes:

    @pytest.mark.parametrize('draw', range(30))
    def test_match_definitions(self, draw):
        X, labels = random_instance(draw)
        dm = pairwise_distances(X)
        L = 3
        np.testing.assert_allclose(dunn(dm, labels), brute_dunn(X, labels), atol=1e-9)
        np.testing.assert_allclose(calinski_harabasz(X, labels), brute_ch(X, labels), atol=1e-9)
        np.testing.assert_allclose(silhouette(dm, labels), brute_silhouette(X, labels), atol=1e-9)
        np.testing.assert_allclose(davies_bouldin(X, labels), brute_db(X, labels), atol=1e-9)
        np.testing.assert_allclose(connectivity(dm, labels, L), brute_connectivity(X, labels, L), atol=1e-9)

    @pytest.mark.parametrize('draw', range(100))
    def test_silhouette_range(self, draw):
        X, labels = random_instance(draw)
        s = silhouette_samples(pairwise_distances(X), labels)
        assert np.all(s >= -1) and np.all(s <= 1)

    def test_conventions(self):
        X = np.array([[0.], [0.], [5.], [5.]])
        dm = pairwise_distances(X)
        labels = np.array([0, 0, 1, 1])
        assert dunn(dm, labels) == math.inf
        assert dunn(dm, np.zeros(4, dtype=int)) == 0
        assert calinski_harabasz(X, labels) == math.inf
        np.testing.assert_equal(silhouette_samples(dm, np.array([0, 0, 1, 2])), [1, 1, 0, 0])
        assert connectivity(dm, labels, 1) == 0

    def test_well_separated_scores(self):
        rng = np.random.default_rng(0)
        X = np.vstack([rng.normal(c, 0.1, size=(6, 2)) for c in ((0, 0), (10, 10))])
        dm = pairwise_distances(X)
        c = pam(dm, 2)
        r = internal_indexes(c, X, dm, l_neighbors=5)
        assert r.scheme == 'PAM2'
        assert r.dunn > 10
        assert r.silhouette > 0.9
        assert r.db < 0.1
        assert r.connectivity == 0
        assert math.isnan(r.apn)


class TestStabilityIndexes:

    def test_column_fom(self):
        col = np.array([1.0, 3.0, 10.0, 10.0])
        labels = np.array([0, 0, 1, 1])
        assert column_fom(col, labels) == pytest.approx(math.sqrt(0.5))

    @pytest.mark.parametrize('draw', range(20))
    def test_ranges(self, draw):
        X, _ = random_instance(draw)
        r = stability_indexes(Algorithm.PAM, X, 2, seed=draw)
        assert 0 <= r.apn <= 1
        assert r.ad >= 0 and r.adm >= 0 and r.fom >= 0

    def test_stable_data_has_zero_apn(self):
        rng = np.random.default_rng(2)
        X = np.vstack([rng.normal(c, 0.05, size=(5, 3)) for c in ((0, 0, 0), (9, 9, 9))])
        r = stability_indexes(Algorithm.AGNES, X, 2)
        assert r.apn == 0
        assert r.adm == pytest.approx(0, abs=1e-12)

    def test_needs_two_columns(self):
        with pytest.raises(ValueError):
            stability_indexes(Algorithm.PAM, np.zeros((5, 1)), 2)


class TestReports:

    def test_scheme_label(self):
        assert scheme_label('diana', 9) == 'DIANA9'

    def test_merge(self):
        a = IndexReport('PAM2', dunn=1.0)
        b = IndexReport('PAM2', dunn=5.0, apn=0.5)
        m = a.merge(b)
        assert (m.dunn, m.apn) == (1.0, 0.5)
        assert len(m.row()) == len(INDEX_HEADER)

    def test_compare_schemes_and_write(self, tmp_path):
        X = np.random.default_rng(3).normal(size=(14, 4))
        reports = compare_schemes(X, ks=(2, 3))
        assert [r.scheme for r in reports] == ['PAM2', 'PAM3', 'AGNES2', 'AGNES3', 'DIANA2', 'DIANA3']
        for r in reports:
            assert not any(math.isnan(v) for v in r.row()[1:])
        write_index_report(tmp_path / 'idx.csv', reports)
        with open(tmp_path / 'idx.csv', newline='') as fp:
            rows = list(csv.reader(fp))
        assert tuple(rows[0]) == INDEX_HEADER
        assert len(rows) == 7

    def test_index_report_consistent(self):
        X = np.random.default_rng(4).normal(size=(10, 3))
        r = index_report('pam', X, 3)
        dm = pairwise_distances(X)
        c = pam(dm, 3)
        assert r.silhouette == pytest.approx(silhouette(dm, c.assignment))
        assert isinstance(c, Clustering)
