"""
.. currentmodule:: wfbench.attacks

=====================================
attack classifiers (:mod:`wfbench.attacks`)
=====================================

Closed-world classifiers used to measure how much a countermeasure hides.

``LL``
    Multinomial naive Bayes over the packet-length histogram
    (:func:`~wfbench.features.ll_features`), add-one smoothed over the
    union vocabulary of ``(direction, size)`` keys.
``HA``
    The same model over packet-length frequencies
    (:func:`~wfbench.features.ha_features`), turned into pseudo-counts by
    scaling with :data:`HA_SCALE` and rounding.
``PA``
    One-vs-rest linear max-margin classifiers over standardized volume and
    size-bucket markers (:func:`~wfbench.features.pa_features`), trained by
    Pegasos-style subgradient descent for a fixed number of seeded epochs.

Predictions break ties toward the lexicographically smallest site id.

.. autosummary::
    :toctree: generated/

    ClassifierKind
    TrainedModel
    Prediction
    train
    predict
    accuracy
    save_model
    load_model

"""
import enum
from dataclasses import dataclass, field
from typing import Dict, Iterable, Optional, Sequence, Tuple

import numba
import numpy as np
import sparse

from ._trace import Trace
from .features import feature_key_order, ha_features, ll_features, pa_features
from .io import read_json_file, write_json_file

#: frequency to pseudo-count factor of the ``HA`` classifier
HA_SCALE = 1000

PA_EPOCHS = 200
PA_LAMBDA = 1e-4


class ClassifierKind(enum.Enum):
    LL = 'LL'
    HA = 'HA'
    PA = 'PA'


@dataclass(frozen=True)
class Prediction:
    site_id: str
    score: float


@dataclass(frozen=True)
class TrainedModel:
    """ Parameters of a trained classifier; immutable and safe to share.

    ``classes`` are sorted and ``vocabulary`` lists the feature keys in
    column order. The naive Bayes kinds fill ``log_prior``,
    ``log_likelihood`` and ``log_unseen`` (the smoothed likelihood of a
    key absent from training); ``PA`` fills ``mean``, ``scale`` and
    ``weights``, whose last column is the bias.
    """
    kind: ClassifierKind
    classes: Tuple[str, ...]
    vocabulary: Tuple
    log_prior: Optional[np.ndarray] = None
    log_likelihood: Optional[np.ndarray] = None
    log_unseen: Optional[np.ndarray] = None
    mean: Optional[np.ndarray] = None
    scale: Optional[np.ndarray] = None
    weights: Optional[np.ndarray] = None
    _index: Dict = field(init=False, repr=False, compare=False)

    def __post_init__(self):
        if not self.classes:
            raise ValueError('a model needs at least one class')
        object.__setattr__(self, 'kind', ClassifierKind(self.kind))
        object.__setattr__(self, '_index', {k: i for i, k in enumerate(self.vocabulary)})


def _entries(kind: ClassifierKind, trace: Trace) -> dict:
    if kind is ClassifierKind.LL:
        return ll_features(trace).entries
    if kind is ClassifierKind.HA:
        return {k: round(v * HA_SCALE) for k, v in ha_features(trace).entries.items()}
    return pa_features(trace).entries


def _count_matrix(rows: Sequence[dict], row_of: Sequence[int], n_rows: int, index: dict) -> sparse.COO:
    """ Sums feature entries into an ``(n_rows, len(index))`` sparse matrix """
    coords = [[], []]
    data = []
    for r, entries in zip(row_of, rows):
        for key, value in entries.items():
            coords[0].append(r)
            coords[1].append(index[key])
            data.append(value)
    return sparse.COO(np.array(coords, dtype=np.intp).reshape(2, -1), np.array(data, dtype=np.float64),
                      shape=(n_rows, len(index)))


@numba.njit(cache=True)
def _pegasos(X, y, lam, order):
    w = np.zeros(X.shape[1])
    t = 0
    for epoch in range(order.shape[0]):
        for i in order[epoch]:
            t += 1
            eta = 1.0 / (lam * t)
            margin = y[i] * np.dot(w, X[i])
            w *= 1.0 - eta * lam
            if margin < 1.0:
                w += eta * y[i] * X[i]
    return w


def train(kind, labeled: Iterable[Tuple[Trace, str]], seed: int = 0) -> TrainedModel:
    """
    Trains a classifier on ``(trace, site_id)`` pairs.

    Empty traces are skipped. ``seed`` drives the sample order of ``PA``
    and is ignored by the naive Bayes kinds.
    """
    kind = ClassifierKind(kind)
    rows, labels = [], []
    for trace, site_id in labeled:
        if len(trace) == 0:
            continue
        rows.append(_entries(kind, trace))
        labels.append(str(site_id))
    classes = tuple(sorted(set(labels)))
    if len(classes) < 2:
        raise ValueError('training needs at least 2 classes, got {}'.format(len(classes)))
    class_index = {c: i for i, c in enumerate(classes)}
    y = np.array([class_index[s] for s in labels])
    vocabulary = tuple(sorted({k for r in rows for k in r}, key=feature_key_order))
    index = {k: i for i, k in enumerate(vocabulary)}

    if kind is ClassifierKind.PA:
        return _train_pa(rows, y, classes, vocabulary, index, seed)

    counts = _count_matrix(rows, y, len(classes), index).todense()
    totals = counts.sum(axis=1, keepdims=True)
    denominator = totals + len(vocabulary)
    return TrainedModel(
        kind=kind,
        classes=classes,
        vocabulary=vocabulary,
        log_prior=np.log(np.bincount(y, minlength=len(classes)) / len(y)),
        log_likelihood=np.log((counts + 1) / denominator),
        log_unseen=-np.log(denominator[:, 0]),
    )


def _train_pa(rows, y, classes, vocabulary, index, seed) -> TrainedModel:
    X = _count_matrix(rows, np.arange(len(rows)), len(rows), index).todense()
    mean = X.mean(axis=0)
    scale = X.std(axis=0)
    scale[scale == 0] = 1.0
    Xs = np.hstack([(X - mean) / scale, np.ones((len(X), 1))])
    rng = np.random.default_rng(seed)
    order = np.array([rng.permutation(len(Xs)) for _ in range(PA_EPOCHS)])
    weights = np.array([
        _pegasos(Xs, np.where(y == c, 1.0, -1.0), PA_LAMBDA, order)
        for c in range(len(classes))
    ])
    return TrainedModel(ClassifierKind.PA, classes, vocabulary, mean=mean, scale=scale, weights=weights)


def _scores(model: TrainedModel, trace: Trace) -> np.ndarray:
    entries = _entries(model.kind, trace)
    x = np.zeros(len(model.vocabulary))
    unseen = 0.0
    for key, value in entries.items():
        i = model._index.get(key)
        if i is None:
            unseen += value
        else:
            x[i] = value
    if model.kind is ClassifierKind.PA:
        xs = np.append((x - model.mean) / model.scale, 1.0)
        return model.weights @ xs
    return model.log_prior + model.log_likelihood @ x + unseen * model.log_unseen


def predict(model: TrainedModel, trace: Trace) -> Prediction:
    """ The most likely site (naive Bayes) or largest margin (``PA``) """
    scores = _scores(model, trace)
    best = int(np.argmax(scores))
    return Prediction(model.classes[best], float(scores[best]))


def accuracy(model: TrainedModel, labeled: Iterable[Tuple[Trace, str]]) -> float:
    """ Fraction of ``(trace, site_id)`` pairs predicted correctly """
    hits = total = 0
    for trace, site_id in labeled:
        total += 1
        hits += predict(model, trace).site_id == site_id
    if total == 0:
        raise ValueError('no labelled traces to score')
    return hits / total


def _key_to_json(key):
    return list(key) if isinstance(key, tuple) else key


def _key_from_json(key):
    return tuple(key) if isinstance(key, list) else key


_ARRAYS = ('log_prior', 'log_likelihood', 'log_unseen', 'mean', 'scale', 'weights')


def save_model(file_name, model: TrainedModel):
    payload = {
        'classifier': model.kind.value,
        'classes': list(model.classes),
        'vocabulary': [_key_to_json(k) for k in model.vocabulary],
    }
    for name in _ARRAYS:
        value = getattr(model, name)
        if value is not None:
            payload[name] = value.tolist()
    write_json_file(file_name, 'model', payload)


def load_model(file_name) -> TrainedModel:
    payload = read_json_file(file_name, 'model')
    arrays = {name: np.array(payload[name], dtype=np.float64) for name in _ARRAYS if name in payload}
    return TrainedModel(
        kind=ClassifierKind(payload['classifier']),
        classes=tuple(payload['classes']),
        vocabulary=tuple(_key_from_json(k) for k in payload['vocabulary']),
        **arrays
    )
