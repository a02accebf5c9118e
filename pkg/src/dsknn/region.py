"""Regions of competence: exact K-NN, output-profile neighbourhoods, k-means.

Also hosts the plain K-NN classifier so the baseline shares the region
search (metric, tie rules) with every DS rule.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .data import Dataset
from .pool import ClassifierPool, OracleMatrix

__all__ = [
    "ClusterModel",
    "KNNClassifier",
    "RegionOfCompetence",
    "kmeans_fit",
    "knn_region",
    "knn_search",
    "nearest_cluster",
    "output_profile",
    "profile_knn",
    "profile_similarity",
]

_CHUNK = 256


def knn_search(reference, queries, K, exclude=None):
    """Exact Euclidean K-NN by full scan.

    Distances are computed from explicit differences (not the expanded dot
    product) so exact ties stay exact; ties are broken by lower reference
    index through a stable sort.

    Parameters
    ----------
    reference : array (n, d)
    queries : array (q, d)
    K : int
    exclude : array (q,) of int, optional
        Reference row to leave out for each query (``-1`` for none); used when
        the queries are themselves reference members.

    Returns
    -------
    indices : array (q, K)
    distances : array (q, K)
    """
    reference = np.asarray(reference, dtype=float)
    queries = np.atleast_2d(np.asarray(queries, dtype=float))
    n = reference.shape[0]
    available = n - (0 if exclude is None else 1)
    if K < 1:
        raise ValueError("K must be at least 1")
    if K > available:
        raise ValueError(f"K={K} exceeds the {available} available reference samples")
    q = queries.shape[0]
    idx_out = np.empty((q, K), dtype=np.int64)
    dist_out = np.empty((q, K))
    for s in range(0, q, _CHUNK):
        diff = queries[s:s + _CHUNK, None, :] - reference[None, :, :]
        d = np.sqrt((diff * diff).sum(axis=-1))
        if exclude is not None:
            ex = np.asarray(exclude[s:s + _CHUNK])
            rows = np.flatnonzero(ex >= 0)
            d[rows, ex[rows]] = np.inf
        order = np.argsort(d, axis=1, kind="stable")[:, :K]
        idx_out[s:s + _CHUNK] = order
        dist_out[s:s + _CHUNK] = np.take_along_axis(d, order, axis=1)
    return idx_out, dist_out


@dataclass(frozen=True, eq=False)
class RegionOfCompetence:
    """The K nearest DSEL samples of one query, nearest first."""

    indices: np.ndarray
    distances: np.ndarray
    labels: np.ndarray
    correctness: np.ndarray      # (pool_size, K)

    @property
    def K(self):
        return self.indices.shape[0]

    @classmethod
    def from_indices(cls, indices, distances, oracle: OracleMatrix):
        indices = np.asarray(indices, dtype=np.int64)
        return cls(indices, np.asarray(distances, dtype=float), oracle.labels[indices],
                   oracle.correctness[:, indices])

    def prefix(self, k):
        return RegionOfCompetence(self.indices[:k], self.distances[:k], self.labels[:k],
                                  self.correctness[:, :k])


def knn_region(query, dsel: Dataset, oracle: OracleMatrix, K: int = 7) -> RegionOfCompetence:
    idx, dist = knn_search(dsel.features, np.atleast_2d(query), K)
    return RegionOfCompetence.from_indices(idx[0], dist[0], oracle)


def output_profile(sample, pool: ClassifierPool) -> np.ndarray:
    """Hard prediction of every pool member for one sample."""
    return pool.predict(np.atleast_2d(sample))[:, 0]


def profile_similarity(a, b) -> float:
    """Fraction of positions where two output profiles agree."""
    a, b = np.asarray(a), np.asarray(b)
    if a.shape != b.shape:
        raise ValueError(f"profile lengths differ: {a.shape} vs {b.shape}")
    if a.size == 0:
        raise ValueError("empty profiles")
    return float(np.mean(a == b))


def profile_knn(query_profile, dsel_profiles, K):
    """K nearest DSEL output profiles.

    Profiles are compared as one-hot concatenations: the squared Euclidean
    distance between two such embeddings is twice the number of members that
    disagree, so ranking by disagreement count gives the same order.

    Parameters
    ----------
    query_profile : array (pool_size,)
    dsel_profiles : array (pool_size, n_dsel)
        ``OracleMatrix.predictions``.

    Returns
    -------
    indices, distances : arrays of length K
    """
    dsel_profiles = np.asarray(dsel_profiles)
    if K > dsel_profiles.shape[1]:
        raise ValueError(f"K={K} exceeds the {dsel_profiles.shape[1]} DSEL samples")
    mismatches = (dsel_profiles != np.asarray(query_profile)[:, None]).sum(axis=0)
    order = np.argsort(mismatches, kind="stable")[:K]
    return order, np.sqrt(2.0 * mismatches[order])


class KNNClassifier:
    """Unweighted K-NN majority vote; ties go to the lowest class index."""

    def __init__(self, K=7):
        self.K = K

    def fit(self, ds: Dataset):
        self.features_ = ds.features
        self.labels_ = ds.labels
        self.n_classes_ = ds.class_count
        return self

    def neighbors(self, X):
        return knn_search(self.features_, X, self.K)

    def vote_counts(self, X):
        idx, _ = self.neighbors(X)
        lab = self.labels_[idx]
        return np.stack([(lab == c).sum(axis=1) for c in range(self.n_classes_)], axis=1)

    def predict(self, X):
        return np.argmax(self.vote_counts(X), axis=1)


# ---------------------------------------------------------------------------
# k-means


@dataclass(frozen=True, eq=False)
class ClusterModel:
    centroids: np.ndarray
    assignments: np.ndarray
    members: tuple
    inertia_history: tuple
    n_iter: int

    @property
    def k(self):
        return self.centroids.shape[0]

    @property
    def inertia(self):
        return self.inertia_history[-1]


def _sq_dists(X, C):
    diff = X[:, None, :] - C[None, :, :]
    return (diff * diff).sum(axis=-1)


def _kmeanspp(X, k, rng):
    n = X.shape[0]
    chosen = [int(rng.integers(n))]
    d2 = _sq_dists(X, X[chosen])[:, 0]
    for _ in range(1, k):
        total = d2.sum()
        if total > 0:
            nxt = int(rng.choice(n, p=d2 / total))
        else:
            # every point coincides with a chosen centre; take any unused row
            unused = np.setdiff1d(np.arange(n), chosen)
            nxt = int(unused[rng.integers(unused.size)])
        chosen.append(nxt)
        d2 = np.minimum(d2, _sq_dists(X, X[[nxt]])[:, 0])
    return X[chosen].copy()


def kmeans_fit(dsel, k=5, seed=0, max_iter=300, tol=1e-6) -> ClusterModel:
    """Lloyd's algorithm from a k-means++ start.

    Iterates until no centroid moves more than ``tol`` or ``max_iter``
    rounds. A cluster left empty is reseeded at the point farthest from its
    current centroid.
    """
    X = dsel.features if isinstance(dsel, Dataset) else np.asarray(dsel, dtype=float)
    n = X.shape[0]
    if not 1 <= k <= n:
        raise ValueError(f"k must be in [1, {n}]")
    rng = np.random.default_rng(seed)
    C = _kmeanspp(X, k, rng)
    history = []
    it = 0
    for it in range(1, max_iter + 1):
        d2 = _sq_dists(X, C)
        assign = np.argmin(d2, axis=1)
        history.append(float(d2[np.arange(n), assign].sum()))
        new = C.copy()
        taken = set()
        for j in range(k):
            mask = assign == j
            if mask.any():
                new[j] = X[mask].mean(axis=0)
        for j in range(k):
            if not (assign == j).any():
                far = d2[np.arange(n), assign].copy()
                far[list(taken)] = -1.0
                p = int(np.argmax(far))
                taken.add(p)
                new[j] = X[p]
                assign[p] = j
        shift = np.sqrt(((new - C) ** 2).sum(axis=1)).max()
        C = new
        if shift < tol:
            break
    d2 = _sq_dists(X, C)
    assign = np.argmin(d2, axis=1)
    inertia = float(d2[np.arange(n), assign].sum())
    if not history or inertia != history[-1]:
        history.append(inertia)
    members = tuple(np.flatnonzero(assign == j) for j in range(k))
    return ClusterModel(C, assign, members, tuple(history), it)


def nearest_cluster(model: ClusterModel, query) -> int:
    return int(np.argmin(_sq_dists(np.atleast_2d(query), model.centroids)[0]))
