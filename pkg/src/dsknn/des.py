"""Dynamic ensemble selection: pick a subset of the pool and let it vote.

Whenever a rule's criterion selects nobody, the whole pool votes unweighted
and the outcome is flagged with ``fallback_used``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dcs import SelectionOutcome, _query_profile, distance_weights, ola_competence
from .pool import ClassifierPool, OracleMatrix
from .region import ClusterModel, RegionOfCompetence, nearest_cluster, profile_knn

__all__ = [
    "DES_RULES",
    "KL_EPSILON",
    "ClusterEnsembles",
    "VoteTally",
    "des_clustering_classify",
    "des_clustering_fit",
    "des_kl_classify",
    "des_kl_competence",
    "des_knn_classify",
    "des_knn_select",
    "des_p_classify",
    "double_fault",
    "knop_classify",
    "knora_e_classify",
    "knora_u_classify",
    "majority_vote",
]

KL_EPSILON = 1e-6


@dataclass(frozen=True, eq=False)
class VoteTally:
    counts: np.ndarray
    winner: int


def majority_vote(predictions, weights=None, n_classes=None) -> VoteTally:
    """(Weighted) plurality vote; the lowest class index wins ties."""
    predictions = np.asarray(predictions, dtype=np.int64).reshape(-1)
    if predictions.size == 0:
        raise ValueError("cannot vote over an empty prediction sequence")
    if weights is not None:
        weights = np.asarray(weights, dtype=float).reshape(-1)
        if weights.shape != predictions.shape:
            raise ValueError("weights and predictions differ in length")
        if np.any(weights < 0):
            raise ValueError("vote weights must be nonnegative")
    size = max(int(predictions.max()) + 1, n_classes or 0)
    counts = np.bincount(predictions, weights=weights, minlength=size).astype(float)
    return VoteTally(counts, int(np.argmax(counts)))


def _ensemble(selected, profile, rule, competence=None, weights=None, fallback=False):
    selected = np.asarray(selected, dtype=np.int64)
    w = None if weights is None else np.asarray(weights, dtype=float)[selected]
    label = majority_vote(profile[selected], w).winner
    return SelectionOutcome(selected, label, competence, rule, fallback)


def _full_pool(profile, rule, competence=None):
    return _ensemble(np.arange(len(profile)), profile, rule, competence, fallback=True)


def knora_e_classify(query, region, pool, oracle, *, query_profile=None):
    """Members correct on every neighbour; drop the farthest neighbour and
    retry while nobody qualifies."""
    profile = _query_profile(query, pool, query_profile)
    correct = region.correctness
    for k in range(region.K, 0, -1):
        oracles = np.flatnonzero(correct[:, :k].all(axis=1))
        if oracles.size:
            return _ensemble(oracles, profile, "knora-e", correct[:, :k].all(axis=1).astype(float))
    return _full_pool(profile, "knora-e")


def _knora_u(correct, profile, rule):
    hits = correct.sum(axis=1).astype(float)
    chosen = np.flatnonzero(hits > 0)
    if chosen.size == 0:
        return _full_pool(profile, rule, hits)
    return _ensemble(chosen, profile, rule, hits, weights=hits)


def knora_u_classify(query, region, pool, oracle, *, query_profile=None):
    """Every member correct on at least one neighbour votes once per such neighbour."""
    profile = _query_profile(query, pool, query_profile)
    return _knora_u(region.correctness, profile, "knora-u")


def knop_classify(query, pool, oracle, dsel_profiles=None, K=7, *, query_profile=None):
    """KNORA-U counting over the K DSEL samples nearest in output-profile space."""
    profile = _query_profile(query, pool, query_profile)
    dsel_profiles = oracle.predictions if dsel_profiles is None else dsel_profiles
    idx, _ = profile_knn(profile, dsel_profiles, K)
    return _knora_u(oracle.correctness[:, idx], profile, "knop")


def des_p_classify(query, region, pool, oracle, *, query_profile=None):
    """Members whose local accuracy beats random guessing (1/M)."""
    profile = _query_profile(query, pool, query_profile)
    M = oracle.n_classes
    competence = ola_competence(region) - 1.0 / M
    # integer comparison: hits/K > 1/M  <=>  hits*M > K
    chosen = np.flatnonzero(region.correctness.sum(axis=1) * M > region.K)
    if chosen.size == 0:
        return _full_pool(profile, "des-p", competence)
    return _ensemble(chosen, profile, "des-p", competence)


def _kl_to_uniform(proba, eps=KL_EPSILON):
    p = np.clip(proba, eps, 1.0 - eps)
    p = p / p.sum(axis=-1, keepdims=True)
    M = p.shape[-1]
    return (p * np.log(p * M)).sum(axis=-1)


def des_kl_competence(region: RegionOfCompetence, oracle: OracleMatrix):
    """Sum over neighbours of KL(member output || uniform), signed by whether
    the member was right, weighted by ``1 / (1 + d)``."""
    proba = oracle.soft_outputs[:, region.indices, :]
    source = _kl_to_uniform(proba) * np.where(region.correctness, 1.0, -1.0)
    return (source * distance_weights(region.distances)[None, :]).sum(axis=1)


def des_kl_classify(query, region, pool, oracle, *, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    competence = des_kl_competence(region, oracle)
    chosen = np.flatnonzero(competence > 0)
    if chosen.size == 0:
        return _full_pool(profile, "des-kl", competence)
    return _ensemble(chosen, profile, "des-kl", competence)


def double_fault(correct_a, correct_b) -> float:
    """Fraction of samples both classifiers get wrong."""
    a = np.asarray(correct_a, dtype=bool)
    b = np.asarray(correct_b, dtype=bool)
    return float(np.mean(~a & ~b))


def _ensemble_sizes(pool_size, n_frac, j_frac):
    N = max(1, math.ceil(n_frac * pool_size - 1e-9))
    J = max(1, math.ceil(j_frac * pool_size - 1e-9))
    if J > N:
        raise ValueError(f"DES-KNN keeps J={J} classifiers out of N={N}; J must not exceed N")
    return min(N, pool_size), min(J, pool_size)


def des_knn_select(correct, n_frac=0.5, j_frac=0.3):
    """Accuracy then diversity selection over a correctness matrix (P, n).

    Keeps the N most accurate members (lower index on ties), then the J of
    those with the smallest mean double-fault against the other N - 1;
    diversity ties go to the more accurate member.
    Returns ``(selected, accuracy)``.
    """
    correct = np.asarray(correct, dtype=bool)
    P = correct.shape[0]
    N, J = _ensemble_sizes(P, n_frac, j_frac)
    hits = correct.sum(axis=1)
    accuracy = hits / correct.shape[1] if correct.shape[1] else np.zeros(P)
    # rank on integer counts so equal scores tie exactly
    top = np.argsort(-hits, kind="stable")[:N]
    if J == N:
        return np.sort(top), accuracy
    wrong = (~correct[top]).astype(np.int64)
    both = wrong @ wrong.T                                       # pairwise double-fault counts
    df_sum = both.sum(axis=1) - np.diag(both)                    # proportional to the mean
    keep = top[np.argsort(df_sum, kind="stable")[:J]]
    return np.sort(keep), accuracy


def des_knn_classify(query, region, pool, oracle, n_frac=0.5, j_frac=0.3, *, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    selected, accuracy = des_knn_select(region.correctness, n_frac, j_frac)
    return _ensemble(selected, profile, "des-knn", accuracy)


@dataclass(frozen=True, eq=False)
class ClusterEnsembles:
    """Per-cluster DES-KNN selections computed once at fit time."""

    model: ClusterModel
    ensembles: tuple
    accuracies: tuple


def des_clustering_fit(cluster_model: ClusterModel, oracle: OracleMatrix, n_frac=0.5, j_frac=0.3):
    ensembles, accuracies = [], []
    for members in cluster_model.members:
        if len(members) == 0:
            ensembles.append(None)
            accuracies.append(None)
            continue
        sel, acc = des_knn_select(oracle.correctness[:, members], n_frac, j_frac)
        ensembles.append(sel)
        accuracies.append(acc)
    return ClusterEnsembles(cluster_model, tuple(ensembles), tuple(accuracies))


def des_clustering_classify(query, cluster_model, pool, oracle, n_frac=0.5, j_frac=0.3, *,
                            ensembles: ClusterEnsembles | None = None, query_profile=None):
    """Region = DSEL members of the query's nearest cluster, then DES-KNN selection."""
    profile = _query_profile(query, pool, query_profile)
    if ensembles is None:
        ensembles = des_clustering_fit(cluster_model, oracle, n_frac, j_frac)
    j = nearest_cluster(ensembles.model, query)
    if ensembles.ensembles[j] is None:
        return _full_pool(profile, "des-clustering")
    return _ensemble(ensembles.ensembles[j], profile, "des-clustering", ensembles.accuracies[j])


DES_RULES = {
    "knora-e": knora_e_classify,
    "knora-u": knora_u_classify,
    "knop": knop_classify,
    "des-p": des_p_classify,
    "des-kl": des_kl_classify,
    "des-knn": des_knn_classify,
    "des-clustering": des_clustering_classify,
}
