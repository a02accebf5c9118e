"""Fitted DS model: pool + DSEL + one named DCS/DES rule."""
from __future__ import annotations

import numpy as np

from .dcs import DCS_RULES
from .des import DES_RULES, des_clustering_fit
from .pool import build_oracle_matrix
from .region import RegionOfCompetence, kmeans_fit, knn_search

__all__ = ["RULES", "DynamicSelector"]

RULES = {**DCS_RULES, **DES_RULES}


class DynamicSelector:
    """Classify queries with a dynamic selection rule.

    Parameters
    ----------
    rule : str
        One of ``RULES``.
    K : int
        Region of competence size.
    mcb_threshold : float
        Output-profile similarity cut for MCB.
    selection_margin : float
        A Priori / A Posteriori margin.
    n_frac, j_frac : float
        DES-KNN and DES-Clustering ensemble fractions.
    n_clusters : int
        k for DES-Clustering.
    seed : int
        k-means seed.
    """

    def __init__(self, rule, K=7, mcb_threshold=0.7, selection_margin=0.0, n_frac=0.5, j_frac=0.3,
                 n_clusters=5, seed=0):
        if rule not in RULES:
            raise ValueError(f"unknown rule {rule!r}; choose from {sorted(RULES)}")
        self.rule = rule
        self.K = K
        self.mcb_threshold = mcb_threshold
        self.selection_margin = selection_margin
        self.n_frac = n_frac
        self.j_frac = j_frac
        self.n_clusters = n_clusters
        self.seed = seed

    def fit(self, pool, dsel, oracle=None):
        self.pool_ = pool
        self.dsel_ = dsel
        self.oracle_ = oracle if oracle is not None else build_oracle_matrix(pool, dsel)
        self.clusters_ = None
        if self.rule == "des-clustering":
            model = kmeans_fit(dsel, min(self.n_clusters, dsel.n_samples), seed=self.seed)
            self.clusters_ = des_clustering_fit(model, self.oracle_, self.n_frac, self.j_frac)
        return self

    def _call(self, query, profile, idx, dist):
        fn = RULES[self.rule]
        o = self.oracle_
        if self.rule == "knop":
            return fn(query, self.pool_, o, o.predictions, self.K, query_profile=profile)
        if self.rule == "des-clustering":
            return fn(query, self.clusters_.model, self.pool_, o, self.n_frac, self.j_frac,
                      ensembles=self.clusters_, query_profile=profile)
        region = RegionOfCompetence.from_indices(idx, dist, o)
        if self.rule == "mcb":
            return fn(query, region, self.pool_, o, threshold=self.mcb_threshold, query_profile=profile)
        if self.rule in ("apriori", "aposteriori"):
            return fn(query, region, self.pool_, o, selection_margin=self.selection_margin,
                      query_profile=profile)
        if self.rule == "des-knn":
            return fn(query, region, self.pool_, o, self.n_frac, self.j_frac, query_profile=profile)
        return fn(query, region, self.pool_, o, query_profile=profile)

    def classify_batch(self, X, neighbors=None, profiles=None):
        """Outcomes for every row of ``X``.

        ``neighbors`` (indices, distances) and ``profiles`` (pool_size, n)
        may be passed in when several rules share the same queries.
        """
        X = np.atleast_2d(X)
        if neighbors is None:
            neighbors = knn_search(self.dsel_.features, X, self.K)
        if profiles is None:
            profiles = self.pool_.predict(X)
        idx, dist = neighbors
        return [self._call(X[q], profiles[:, q], idx[q], dist[q]) for q in range(X.shape[0])]

    def classify(self, query):
        return self.classify_batch(np.atleast_2d(query))[0]

    def predict(self, X, neighbors=None, profiles=None):
        return np.array([o.predicted_label for o in self.classify_batch(X, neighbors, profiles)],
                        dtype=np.int64)
