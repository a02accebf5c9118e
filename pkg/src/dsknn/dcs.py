"""Dynamic classifier selection: pick one classifier per query.

Every rule scores each pool member on the region of competence, selects the
argmax (lowest pool index on ties) and returns that member's own prediction
for the query. The ``*_competence`` functions are the pure scoring step; the
``*_classify`` wrappers add selection.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .pool import ClassifierPool, OracleMatrix
from .region import RegionOfCompetence, output_profile

__all__ = [
    "DCS_RULES",
    "SelectionOutcome",
    "aposteriori_classify",
    "aposteriori_competence",
    "apriori_classify",
    "apriori_competence",
    "distance_weights",
    "lca_classify",
    "lca_competence",
    "mcb_classify",
    "mcb_competence",
    "mla_classify",
    "mla_competence",
    "ola_classify",
    "ola_competence",
    "rank_classify",
    "rank_competence",
]


@dataclass(frozen=True, eq=False)
class SelectionOutcome:
    """What a DS rule decided for one query."""

    selected_indices: np.ndarray
    predicted_label: int
    competence: np.ndarray | None
    rule: str
    fallback_used: bool = False

    def same_decision(self, other) -> bool:
        """Equal selection, label, competences and fallback flag (rule name ignored)."""
        comp_eq = (self.competence is None and other.competence is None) or (
            self.competence is not None and other.competence is not None
            and np.array_equal(self.competence, other.competence))
        return (np.array_equal(self.selected_indices, other.selected_indices)
                and self.predicted_label == other.predicted_label
                and self.fallback_used == other.fallback_used and comp_eq)


def distance_weights(distances):
    """``1 / (1 + d)``: decays with distance and stays finite at d = 0."""
    return 1.0 / (1.0 + np.asarray(distances, dtype=float))


def _query_profile(query, pool, query_profile):
    return output_profile(query, pool) if query_profile is None else np.asarray(query_profile)


TIE_TOL = 1e-12


def _best_index(competence):
    """Lowest index whose competence is within a relative 1e-12 of the maximum,
    so equal competences reached through different float sums still tie."""
    top = competence.max()
    return int(np.flatnonzero(competence >= top - TIE_TOL * max(1.0, abs(top)))[0])


def _select_best(competence, profile, rule, fallback=False):
    best = _best_index(competence)
    return SelectionOutcome(np.array([best]), int(profile[best]), competence, rule, fallback)


def ola_competence(region: RegionOfCompetence):
    return region.correctness.mean(axis=1)


def lca_competence(region: RegionOfCompetence, profile):
    same = region.labels[None, :] == profile[:, None]            # neighbours of the predicted class
    hits = (region.correctness & same).sum(axis=1)
    total = same.sum(axis=1)
    return np.divide(hits, total, out=np.zeros(len(profile)), where=total > 0)


def mla_competence(region: RegionOfCompetence, profile):
    w = distance_weights(region.distances)[None, :]
    same = region.labels[None, :] == profile[:, None]
    hits = (w * (region.correctness & same)).sum(axis=1)
    total = (w * same).sum(axis=1)
    return np.divide(hits, total, out=np.zeros(len(profile)), where=total > 0)


def rank_competence(region: RegionOfCompetence):
    """Number of consecutive correct neighbours, starting from the nearest."""
    wrong = ~region.correctness
    first_wrong = np.argmax(wrong, axis=1)
    return np.where(wrong.any(axis=1), first_wrong, region.K).astype(float)


def mcb_competence(region: RegionOfCompetence, oracle: OracleMatrix, profile, threshold=0.7):
    """OLA over neighbours whose output profile agrees with the query's on at
    least ``threshold`` of the pool. Returns ``(competence, fallback_used)``;
    when no neighbour passes, the whole region is used."""
    neighbour_profiles = oracle.predictions[:, region.indices]
    similarity = (neighbour_profiles == profile[:, None]).mean(axis=0)
    keep = similarity >= threshold
    if not keep.any():
        return ola_competence(region), True
    return region.correctness[:, keep].mean(axis=1), False


def _neighbour_proba(region, oracle):
    return oracle.soft_outputs[:, region.indices, :]              # (P, K, M)


def apriori_competence(region: RegionOfCompetence, oracle: OracleMatrix):
    """Distance-weighted mean probability each member gives the true neighbour label."""
    proba = _neighbour_proba(region, oracle)
    k = np.arange(region.K)
    p_true = proba[:, k, region.labels]                           # (P, K)
    w = distance_weights(region.distances)
    return (p_true * w).sum(axis=1) / w.sum()


def aposteriori_competence(region: RegionOfCompetence, oracle: OracleMatrix, profile):
    """Weighted share of the member's support for its query prediction that
    falls on neighbours truly of that class."""
    proba = _neighbour_proba(region, oracle)
    P = proba.shape[0]
    p_omega = proba[np.arange(P)[:, None], np.arange(region.K)[None, :], profile[:, None]]
    w = distance_weights(region.distances)[None, :]
    same = region.labels[None, :] == profile[:, None]
    num = (p_omega * w * same).sum(axis=1)
    den = (p_omega * w).sum(axis=1)
    return np.divide(num, den, out=np.zeros(P), where=den > 0)


def _with_margin(competence, profile, rule, margin):
    """Plain argmax when ``margin`` is 0. Otherwise, if the runner-up is closer
    than ``margin`` to the winner, every member within ``margin`` of the best
    votes (ties to the lowest class)."""
    if margin <= 0 or competence.size == 1:
        return _select_best(competence, profile, rule)
    best = competence.max()
    close = np.flatnonzero(best - competence < margin)
    if close.size == 1 or margin <= TIE_TOL:
        return _select_best(competence, profile, rule)
    votes = np.bincount(profile[close])
    return SelectionOutcome(close, int(np.argmax(votes)), competence, rule, False)


def ola_classify(query, region, pool, oracle, *, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    return _select_best(ola_competence(region), profile, "ola")


def lca_classify(query, region, pool, oracle, *, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    return _select_best(lca_competence(region, profile), profile, "lca")


def mla_classify(query, region, pool, oracle, *, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    return _select_best(mla_competence(region, profile), profile, "mla")


def rank_classify(query, region, pool, oracle, *, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    return _select_best(rank_competence(region), profile, "rank")


def mcb_classify(query, region, pool, oracle, *, threshold=0.7, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    comp, fallback = mcb_competence(region, oracle, profile, threshold)
    return _select_best(comp, profile, "mcb", fallback)


def apriori_classify(query, region, pool, oracle, *, selection_margin=0.0, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    return _with_margin(apriori_competence(region, oracle), profile, "apriori", selection_margin)


def aposteriori_classify(query, region, pool, oracle, *, selection_margin=0.0, query_profile=None):
    profile = _query_profile(query, pool, query_profile)
    return _with_margin(aposteriori_competence(region, oracle, profile), profile, "aposteriori",
                        selection_margin)


DCS_RULES = {
    "ola": ola_classify,
    "lca": lca_classify,
    "mla": mla_classify,
    "rank": rank_classify,
    "mcb": mcb_classify,
    "apriori": apriori_classify,
    "aposteriori": aposteriori_classify,
}
