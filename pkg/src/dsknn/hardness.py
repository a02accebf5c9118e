"""kDN instance hardness, hardness bins, and the hardness-gated hybrid classifier."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .data import Dataset, merge
from .region import KNNClassifier, knn_search

__all__ = [
    "HardnessBins",
    "HardnessProfile",
    "HybridClassifier",
    "accuracy_per_bin",
    "bin_by_hardness",
    "hybrid_classify",
    "kdn",
    "kdn_counts",
    "kdn_profile",
    "routing_hardness",
]


def kdn_counts(X, y, reference: Dataset, K=7, self_indices=None):
    """Number of the K nearest reference samples whose label differs from ``y``.

    ``self_indices[i]`` is the reference row of query i when the query is a
    reference member (it is then left out of its own neighbourhood), or -1.
    """
    idx, _ = knn_search(reference.features, X, K, exclude=self_indices)
    return (reference.labels[idx] != np.asarray(y)[:, None]).sum(axis=1)


def kdn(query, true_label, reference: Dataset, K=7, query_index=None) -> float:
    """Fraction of the query's K nearest reference neighbours with another label."""
    ex = None if query_index is None else np.array([query_index])
    return int(kdn_counts(np.atleast_2d(query), [true_label], reference, K, ex)[0]) / K


@dataclass(frozen=True, eq=False)
class HardnessProfile:
    """Per-instance kDN, kept as integer disagreement counts."""

    counts: np.ndarray
    K: int
    reference: str

    @property
    def values(self):
        return self.counts / self.K


def kdn_profile(ds: Dataset, reference: Dataset | None = None, K=7) -> HardnessProfile:
    """kDN of every instance of ``ds``; without a reference, ``ds`` is its own
    reference and each instance skips itself."""
    if reference is None:
        counts = kdn_counts(ds.features, ds.labels, ds, K, np.arange(ds.n_samples))
        return HardnessProfile(counts, K, ds.name)
    return HardnessProfile(kdn_counts(ds.features, ds.labels, reference, K), K, reference.name)


@dataclass(eq=False)
class HardnessBins:
    """Test instances grouped by exact kDN level ``m / K``, m = 0..K.

    Bin membership is an integer count, so no instance can straddle a
    floating-point boundary.
    """

    K: int
    bin_of: np.ndarray
    true_labels: np.ndarray
    correct: dict = field(default_factory=dict)

    @property
    def n_bins(self):
        return self.K + 1

    @property
    def counts(self):
        return np.bincount(self.bin_of, minlength=self.n_bins)

    @property
    def levels(self):
        return np.arange(self.n_bins) / self.K

    def add(self, technique, predictions):
        hits = np.asarray(predictions) == self.true_labels
        self.correct[technique] = np.bincount(self.bin_of, weights=hits, minlength=self.n_bins)
        return self

    def accuracy(self, technique):
        return _ratio(self.correct[technique], self.counts)


def _ratio(correct, counts):
    return {int(m): float(correct[m] / counts[m]) for m in np.flatnonzero(counts)}


def bin_by_hardness(test: Dataset, reference: Dataset, K=7) -> HardnessBins:
    counts = kdn_counts(test.features, test.labels, reference, K)
    return HardnessBins(K, counts, test.labels.copy())


def accuracy_per_bin(predictions, true_labels, bins: HardnessBins) -> dict:
    """Accuracy within each nonempty bin, keyed by disagreement count m (kDN = m/K).

    Empty bins are absent from the result rather than reported as 0.
    """
    hits = np.asarray(predictions) == np.asarray(true_labels)
    correct = np.bincount(bins.bin_of, weights=hits, minlength=bins.n_bins)
    return _ratio(correct, bins.counts)


def routing_hardness(neighbor_labels, n_classes):
    """Label-free hardness: share of the K neighbours that disagree with the
    neighbourhood's own majority label (ties to the lowest class).

    Returns ``(hardness, majority_label)`` arrays.
    """
    lab = np.atleast_2d(neighbor_labels)
    votes = np.stack([(lab == c).sum(axis=1) for c in range(n_classes)], axis=1)
    majority = np.argmax(votes, axis=1)
    K = lab.shape[1]
    return (K - votes.max(axis=1)) / K, majority


class HybridClassifier:
    """Route easy queries to K-NN and hard ones to a DS rule.

    Hardness is measured without the query's label (see
    :func:`routing_hardness`) on the K-NN's own reference set; a query goes to
    K-NN when its hardness is below ``tau``.

    Parameters
    ----------
    ds : DynamicSelector
        Unfitted or fitted DS route.
    tau : float in [0, 1]
        Use ``tau > 1`` for a pure K-NN system.
    K : int
    """

    def __init__(self, ds, tau=0.4, K=7):
        if tau < 0:
            raise ValueError("tau must be nonnegative")
        self.ds = ds
        self.tau = tau
        self.K = K
        self.routing_counts = {"knn": 0, "ds": 0}

    def fit(self, train: Dataset, dsel: Dataset, pool, oracle=None):
        self.reference_ = merge(train, dsel, name=f"{train.name}+dsel")
        self.knn_ = KNNClassifier(self.K).fit(self.reference_)
        if not hasattr(self.ds, "pool_"):
            self.ds.fit(pool, dsel, oracle)
        return self

    def route(self, X):
        idx, _ = self.knn_.neighbors(X)
        hardness, majority = routing_hardness(self.reference_.labels[idx], self.reference_.class_count)
        return hardness, majority, hardness >= self.tau

    def predict(self, X, ds_predictions=None, return_routes=False):
        """Labels for ``X``; routes are ``"knn"`` or ``"ds"`` per query.

        ``ds_predictions`` lets a caller that already ran the DS rule on ``X``
        reuse those labels.
        """
        X = np.atleast_2d(X)
        _, majority, to_ds = self.route(X)
        labels = majority.copy()
        if to_ds.any():
            if ds_predictions is None:
                labels[to_ds] = self.ds.predict(X[to_ds])
            else:
                labels[to_ds] = np.asarray(ds_predictions)[to_ds]
        self.routing_counts["ds"] += int(to_ds.sum())
        self.routing_counts["knn"] += int((~to_ds).sum())
        routes = np.where(to_ds, "ds", "knn")
        return (labels, routes) if return_routes else labels


def hybrid_classify(query, hybrid: HybridClassifier):
    """Single-query form of :meth:`HybridClassifier.predict`; returns ``(label, route)``."""
    labels, routes = hybrid.predict(np.atleast_2d(query), return_routes=True)
    return int(labels[0]), str(routes[0])
