"""Averaging classifiers and the three retraining strategies.

Every classifier here is a label-weighted mean of feature rows.  Initial
training averages over the given (noisy) labels; retraining averages over
the initial model's hard predictions, optionally restricted to a subset of
rows.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import _kernels


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    weights: np.ndarray

    def __post_init__(self):
        w = np.array(self.weights, dtype=np.float64).reshape(-1)
        if not np.all(np.isfinite(w)):
            raise ValueError("classifier weights must be finite")
        w.setflags(write=False)
        object.__setattr__(self, "weights", w)

    @property
    def d(self):
        return self.weights.shape[0]

    @property
    def is_zero(self):
        return not np.any(self.weights)

    def scores(self, X):
        X = np.asarray(X, dtype=np.float64)
        if X.ndim != 2 or X.shape[1] != self.d:
            raise ValueError(f"expected an (n, {self.d}) matrix, got shape {X.shape}")
        return _kernels.scores(X, self.weights)

    def predict_many(self, X):
        return _kernels.sign_labels(self.scores(X))

    def to_csv_row(self):
        return ",".join(repr(float(v)) for v in self.weights)

    @classmethod
    def from_csv_row(cls, line):
        return cls(np.array([float(v) for v in line.strip().split(",")]))

    def __eq__(self, other):
        if not isinstance(other, LinearClassifier):
            return NotImplemented
        return np.array_equal(self.weights, other.weights)

    __hash__ = None


def classifier_csv_header(d):
    return ",".join(f"theta_{j}" for j in range(d))


@dataclass(frozen=True, eq=False)
class RetrainReport:
    classifier: LinearClassifier
    selected_indices: np.ndarray
    predicted_labels: np.ndarray
    strategy: str = "full"


class EmptyConsensusError(ValueError):
    """Raised when initial predictions disagree with every given label.

    The (empty) report is attached as ``report`` so callers can pick a
    fallback themselves.
    """

    def __init__(self, report):
        super().__init__("consensus set is empty; no row has predicted label == given label")
        self.report = report


def _require_rows(dataset):
    if dataset.n < 1:
        raise ValueError("empty dataset")


def fit_initial(dataset):
    """theta_0 = (1/n) sum_i noisy_i * x_i."""
    _require_rows(dataset)
    return LinearClassifier(_kernels.label_weighted_mean(dataset.features, dataset.noisy_labels))


def predict(classifier, x):
    """Sign prediction for one feature vector; a zero score maps to +1."""
    x = np.asarray(x, dtype=np.float64).reshape(-1)
    if x.shape[0] != classifier.d:
        raise ValueError(f"dimension mismatch: classifier has d={classifier.d}, x has {x.shape[0]}")
    return 1 if float(x @ classifier.weights) >= 0.0 else -1


def _report(dataset, predicted, index, strategy):
    index = np.asarray(index, dtype=np.int64)
    weights = _kernels.label_weighted_mean(dataset.features, predicted, index)
    predicted = predicted.copy()
    predicted.setflags(write=False)
    index.setflags(write=False)
    return RetrainReport(LinearClassifier(weights), index, predicted, strategy)


def retrain_full(dataset, initial):
    _require_rows(dataset)
    predicted = initial.predict_many(dataset.features)
    return _report(dataset, predicted, np.arange(dataset.n), "full")


def retrain_consensus(dataset, initial):
    """Retrain on rows where the initial prediction agrees with the given label.

    Raises EmptyConsensusError (carrying the empty report) if no row agrees.
    """
    _require_rows(dataset)
    predicted = initial.predict_many(dataset.features)
    index = np.flatnonzero(predicted == dataset.noisy_labels)
    report = _report(dataset, predicted, index, "consensus")
    if index.size == 0:
        raise EmptyConsensusError(report)
    return report


def confidence_selection(scores, keep_fraction):
    """Indices of the ceil(keep_fraction * n) largest |scores|, ties to the lower index."""
    if not (0.0 < keep_fraction <= 1.0):
        raise ValueError(f"keep_fraction must lie in (0, 1], got {keep_fraction}")
    n = scores.shape[0]
    # the epsilon guards against products like 0.07 * 100 = 7.000000000000001
    k = min(n, max(1, math.ceil(keep_fraction * n - 1e-9)))
    order = np.argsort(-np.abs(scores), kind="stable")
    return np.sort(order[:k])


def retrain_confidence(dataset, initial, keep_fraction=0.5):
    """Retrain on the rows where the initial model is most confident.

    For two classes the gap between the top two predicted probabilities is
    monotone in ``|<x, theta_0>|``, so rows are ranked by absolute score.
    """
    _require_rows(dataset)
    s = initial.scores(dataset.features)
    predicted = _kernels.sign_labels(s)
    index = confidence_selection(s, keep_fraction)
    return _report(dataset, predicted, index, "confidence")
