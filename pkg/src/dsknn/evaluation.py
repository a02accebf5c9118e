"""Friedman average ranks, win/tie/loss counts and the sign test."""
from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass

import numpy as np
from scipy.stats import rankdata

__all__ = [
    "Z_VALUES",
    "ResultsTable",
    "WinTieLoss",
    "friedman_ranks",
    "sign_test",
    "sign_test_critical",
    "win_tie_loss",
]

# one-sided normal quantiles for the supported significance levels
Z_VALUES = {0.10: 1.282, 0.05: 1.645, 0.01: 2.326}
PRECISION = 2


@dataclass(frozen=True, eq=False)
class ResultsTable:
    """Mean accuracy (percent) per dataset (rows) and technique (columns)."""

    datasets: tuple
    techniques: tuple
    mean: np.ndarray
    std: np.ndarray | None = None

    def __post_init__(self):
        mean = np.asarray(self.mean, dtype=float)
        if mean.shape != (len(self.datasets), len(self.techniques)):
            raise ValueError("mean must have shape (n_datasets, n_techniques)")
        object.__setattr__(self, "datasets", tuple(self.datasets))
        object.__setattr__(self, "techniques", tuple(self.techniques))
        object.__setattr__(self, "mean", mean)
        if self.std is not None:
            object.__setattr__(self, "std", np.asarray(self.std, dtype=float))

    def column(self, technique):
        return self.mean[:, self.techniques.index(technique)]

    def rounded(self):
        return np.round(self.mean, PRECISION)

    def to_csv(self, std=False):
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["dataset", *self.techniques])
        values = self.std if std else self.mean
        for name, row in zip(self.datasets, values):
            w.writerow([name, *(f"{v:.4f}" for v in row)])
        return buf.getvalue()


def friedman_ranks(table: ResultsTable) -> dict:
    """Average rank per technique; 1 is best.

    Accuracies are compared at two decimals, and tied techniques share the
    mean of the positions they occupy.
    """
    if len(table.techniques) < 2:
        # a lone technique is trivially first everywhere
        return {t: 1.0 for t in table.techniques}
    if not table.datasets:
        raise ValueError("need at least one dataset")
    ranks = rankdata(-table.rounded(), method="average", axis=1)
    return dict(zip(table.techniques, ranks.mean(axis=0).tolist()))


def sign_test_critical(n_exp: int, alpha: float = 0.05) -> int:
    """Minimum number of wins out of ``n_exp`` to reject equivalence.

    ``ceil(n_exp / 2 + z_alpha * sqrt(n_exp) / 2)``.
    """
    if n_exp < 1:
        raise ValueError("n_exp must be at least 1")
    z = Z_VALUES.get(alpha)
    if z is None:
        raise ValueError(f"unsupported alpha {alpha}; choose from {sorted(Z_VALUES)}")
    return math.ceil(n_exp / 2 + z * math.sqrt(n_exp) / 2)


@dataclass(frozen=True)
class WinTieLoss:
    technique: str
    baseline: str
    wins: int
    ties: int
    losses: int

    @property
    def n(self):
        return self.wins + self.ties + self.losses


def win_tie_loss(table: ResultsTable, baseline: str) -> dict:
    """Per technique, datasets where it beats / ties / trails ``baseline``
    (comparison at two decimals)."""
    acc = table.rounded()
    base = acc[:, table.techniques.index(baseline)]
    out = {}
    for j, tech in enumerate(table.techniques):
        col = acc[:, j]
        out[tech] = WinTieLoss(tech, baseline, int((col > base).sum()), int((col == base).sum()),
                               int((col < base).sum()))
    return out


def sign_test(wtl: WinTieLoss, alpha: float = 0.05) -> bool:
    """True when the strict win count reaches the critical value (ties count
    as non-wins)."""
    return wtl.wins >= sign_test_critical(wtl.n, alpha)
