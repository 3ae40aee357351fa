import numpy as np
import pytest

from wfbench import Trace
from wfbench.attacks import (
    ClassifierKind, TrainedModel, train, predict, accuracy, save_model, load_model,
)
from wfbench.synth import synth_generate


def incoming(site_id, *sizes):
    return Trace(site_id, [1] * len(sizes), [1.0] * len(sizes), sizes)


@pytest.fixture(scope='module')
def separable():
    return [(incoming('small', 100, 100, 52), 'small') for _ in range(4)] + \
        [(incoming('large', 1400, 1400, 1500), 'large') for _ in range(4)]


@pytest.fixture(scope='module')
def synthetic():
    ds = synth_generate(n_sites=5, traces_per_site=10, seed=3)
    train_set = [(t, ws.site_id) for ws in ds for t in ws.traces[:8]]
    test_set = [(t, ws.site_id) for ws in ds for t in ws.traces[8:]]
    return train_set, test_set


@pytest.mark.parametrize('kind', list(ClassifierKind))
class TestClassifiers:

    def test_separable(self, kind, separable):
        model = train(kind, separable)
        assert model.classes == ('large', 'small')
        assert accuracy(model, separable) == 1.0
        assert predict(model, incoming('?', 100, 52)).site_id == 'small'

    def test_unseen_sizes(self, kind, separable):
        model = train(kind, separable)
        assert predict(model, incoming('?', 777, 9999)).site_id in model.classes

    def test_deterministic(self, kind, synthetic):
        train_set, test_set = synthetic
        a, b = train(kind, train_set, seed=1), train(kind, train_set, seed=1)
        assert [predict(a, t) for t, _ in test_set] == [predict(b, t) for t, _ in test_set]

    def test_synthetic_accuracy(self, kind, synthetic):
        train_set, test_set = synthetic
        assert accuracy(train(kind, train_set), test_set) >= 0.8

    def test_needs_two_classes(self, kind, separable):
        with pytest.raises(ValueError):
            train(kind, separable[:4])

    def test_save_and_load(self, kind, synthetic, tmp_path):
        train_set, test_set = synthetic
        model = train(kind, train_set)
        file_name = str(tmp_path / 'model.json')
        save_model(file_name, model)
        loaded = load_model(file_name)
        assert loaded.kind is model.kind
        assert loaded.classes == model.classes
        assert loaded.vocabulary == model.vocabulary
        for t, _ in test_set:
            assert predict(loaded, t).site_id == predict(model, t).site_id


class TestNaiveBayes:

    def test_tie_goes_to_smallest_site(self):
        labeled = [(incoming('zeta', 100, 100), 'zeta'), (incoming('alpha', 200, 200), 'alpha')]
        for kind in (ClassifierKind.LL, ClassifierKind.HA):
            model = train(kind, labeled)
            assert predict(model, incoming('?', 999)).site_id == 'alpha'

    def test_smoothed_likelihoods(self):
        model = train('LL', [(incoming('a', 100, 100, 100), 'a'), (incoming('b', 200), 'b')])
        assert model.vocabulary == ((1, 100), (1, 200))
        np.testing.assert_allclose(np.exp(model.log_likelihood), [[4 / 5, 1 / 5], [1 / 3, 2 / 3]])
        np.testing.assert_allclose(np.exp(model.log_unseen), [1 / 5, 1 / 3])
        np.testing.assert_allclose(np.exp(model.log_prior), [0.5, 0.5])

    def test_empty_traces_skipped(self, separable):
        model = train('LL', separable + [(Trace('small', [], [], []), 'small')])
        np.testing.assert_allclose(np.exp(model.log_prior), [0.5, 0.5])

    def test_ha_ignores_repetition(self):
        labeled = [(incoming('a', 100, 1500), 'a'), (incoming('b', 100, 100, 100, 1500), 'b')]
        model = train('HA', labeled)
        assert predict(model, incoming('?', 100, 1500, 100, 1500)).site_id == 'a'

    def test_shuffled_labels_near_chance(self, synthetic):
        train_set, test_set = synthetic
        rng = np.random.default_rng(0)
        labels = [s for _, s in train_set]
        shuffled = [(t, labels[i]) for (t, _), i in zip(train_set, rng.permutation(len(labels)))]
        assert accuracy(train('LL', shuffled), test_set) < accuracy(train('LL', train_set), test_set)


class TestTrainedModel:

    def test_needs_classes(self):
        with pytest.raises(ValueError):
            TrainedModel(ClassifierKind.LL, (), ())

    def test_kind_coerced(self):
        assert TrainedModel('PA', ('a',), ()).kind is ClassifierKind.PA

    def test_accuracy_needs_traces(self, separable):
        with pytest.raises(ValueError):
            accuracy(train('LL', separable), [])


@pytest.mark.slow
def test_shuffled_labels_at_chance():
    # k = 32 sites, 16/4 split, ten trials
    ds = synth_generate(n_sites=32, traces_per_site=20, seed=0)
    scores = []
    for trial in range(10):
        rng = np.random.default_rng(trial)
        train_set, test_set = [], []
        for ws in ds:
            order = rng.permutation(len(ws.traces))
            train_set += [(ws.traces[i], ws.site_id) for i in order[:16]]
            test_set += [(ws.traces[i], ws.site_id) for i in order[16:]]
        labels = rng.permutation([s for _, s in train_set])
        shuffled = [(t, str(s)) for (t, _), s in zip(train_set, labels)]
        scores.append(accuracy(train('LL', shuffled, seed=trial), test_set))
    assert np.mean(scores) <= 3 / len(ds)
