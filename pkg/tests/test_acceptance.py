"""Acceptance criteria, one test each, every test printing a PASS/FAIL line."""
import itertools
import json
import time

import numpy as np
import pytest

import micro
from dsknn.data import Dataset
from dsknn.evaluation import ResultsTable, friedman_ranks, sign_test_critical
from dsknn.hardness import HybridClassifier, kdn_profile
from dsknn.harness import desk_preset, load_dataset, prepare_replication, run_experiment
from dsknn.region import KNNClassifier
from dsknn.selector import DynamicSelector
from verdicts import record

HARD = 4          # kDN >= 4/7
RECOVER = (5, 6)  # kDN in {5/7, 6/7}


@pytest.fixture(scope="session")
def desk():
    t0 = time.perf_counter()
    report = run_experiment(desk_preset())
    return report, time.perf_counter() - t0


def test_c1_brute_force_equivalence():
    rng = np.random.default_rng(20240601)
    t0 = time.perf_counter()
    bad = []
    for i in range(200):
        m, K, params = micro.random_micro(rng)
        for rule in micro.RULE_NAMES:
            bad += [f"#{i} {rule}: {e}" for e in micro.check_rule(rule, m, K, params)]
    elapsed = time.perf_counter() - t0
    ok = not bad and elapsed < 10 and len(micro.RULE_NAMES) == 14
    assert record(1, ok, f"200 instances x {len(micro.RULE_NAMES)} rules, {len(bad)} mismatches, "
                         f"{elapsed:.1f}s"), bad[:5]


def _direct(X, y, K):
    n = len(y)
    out = []
    for i in range(n):
        d = sorted((abs(X[j] - X[i]), j) for j in range(n) if j != i)
        out.append(sum(y[j] != y[i] for _, j in d[:K]))
    return out


def test_c2_kdn_exhaustive():
    # every binary labelling of two 9-point layouts (one with distance ties), every K
    layouts = [np.arange(9.0), np.array([0, 1, 2, 3, 4, 6, 8, 9, 10.0])]
    checked = bad = 0
    for X, labels, K in itertools.product(layouts, itertools.product([0, 1], repeat=9), (1, 3, 5, 7)):
        y = np.array(labels)
        prof = kdn_profile(Dataset(X[:, None], y, 2), K=K)
        checked += 1
        if prof.counts.tolist() != _direct(X, y, K) or not np.array_equal(prof.values, prof.counts / K):
            bad += 1
    assert record(2, bad == 0, f"{checked} labellings x K checked, {bad} mismatches")


def test_c3_forced_failure(desk):
    report, _ = desk
    offenders = []
    for d in report.datasets:
        h = report.hardness[d]
        for m in range(HARD, h["K"] + 1):
            if h["correct"]["7nn"][m]:
                offenders.append(f"{d} bin {m}/7: {h['correct']['7nn'][m]} of {h['counts'][m]} correct")
    assert record(3, not offenders, "7-NN zero in every bin >= 4/7" if not offenders
                  else "; ".join(offenders))


def test_c4_ds_recovers_hard(desk):
    report, elapsed = desk
    details, ok = [], elapsed < 300
    for tech in ("knora-u", "des-p", "ola"):
        eligible = good = 0
        for d in report.datasets:
            h = report.hardness[d]
            n = sum(h["counts"][m] for m in RECOVER)
            if n == 0 or sum(h["correct"]["7nn"][m] for m in RECOVER):
                continue
            eligible += 1
            good += sum(h["correct"][tech][m] for m in RECOVER) > 0
        frac = good / eligible if eligible else 0.0
        ok &= eligible > 0 and frac >= 0.8
        details.append(f"{tech} {good}/{eligible}")
    assert record(4, ok, ", ".join(details) + f", desk run {elapsed:.0f}s")


def test_c5_ds_beats_knn(desk):
    report, _ = desk
    tab = report.table()
    knn = tab.column("7nn")
    ok = len(report.datasets) >= 10
    details = []
    for tech in ("knora-u", "des-p"):
        frac = float(np.mean(tab.column(tech) >= knn))
        ok &= frac >= 0.7
        details.append(f"{tech} >= 7nn on {frac:.0%}")
    ranks = report.ranks()
    median = float(np.median(list(ranks.values())))
    for base in ("1nn", "7nn"):
        ok &= ranks[base] > median
        details.append(f"{base} rank {ranks[base]:.2f} vs median {median:.2f}")
    assert record(5, ok, "; ".join(details))


def test_c6_critical_values():
    got = (sign_test_critical(30, 0.05), sign_test_critical(30, 0.01))
    assert record(6, got == (20, 22), f"n=30: {got}")


def test_c7_friedman_tie():
    table = ResultsTable(["d0", "d1", "d2"], ("a", "b", "c", "d"),
                         np.array([[90.0, 90.0, 80.0, 70.0],
                                   [60.0, 70.0, 80.0, 90.0],
                                   [85.0, 75.0, 95.0, 65.0]]))
    ranks = friedman_ranks(table)
    expected = {"a": (1.5 + 4 + 2) / 3, "b": (1.5 + 3 + 3) / 3, "c": (3 + 2 + 1) / 3, "d": (4 + 1 + 4) / 3}
    from scipy.stats import rankdata
    per_row = rankdata(-table.rounded(), axis=1)
    ok = (per_row[0, :2].tolist() == [1.5, 1.5] and np.all(per_row.sum(1) == 4 * 5 / 2)
          and all(ranks[t] == pytest.approx(v) for t, v in expected.items()))
    assert record(7, ok, f"ranks {ranks}")


def _bitwise_tau(cfg):
    bad = []
    for spec in cfg.datasets:
        ds = load_dataset(spec)
        r = prepare_replication(ds, cfg, 0)
        ds_sel = DynamicSelector("knora-u", K=cfg.K, seed=r.selector_seed)
        ds_pred = ds_sel.fit(r.pool, r.dsel, r.oracle).predict(r.test.features)
        knn_pred = KNNClassifier(cfg.K).fit(r.reference).predict(r.test.features)
        for tau, want in ((0.0, ds_pred), (1.0 + 1e-9, knn_pred)):
            h = HybridClassifier(DynamicSelector("knora-u", K=cfg.K, seed=r.selector_seed), tau=tau, K=cfg.K)
            got = h.fit(r.train, r.dsel, r.pool, r.oracle).predict(r.test.features)
            if not np.array_equal(got, want):
                bad.append(f"{spec['name']} tau={tau}")
    return bad


def test_c8_hybrid(desk):
    report, _ = desk
    bad = _bitwise_tau(desk_preset())
    tab = report.table()
    hy, knn, ds = tab.column("hybrid-knora-u"), tab.column("7nn"), tab.column("knora-u")
    frac = float(np.mean(hy >= np.maximum(knn, ds - 1.0)))
    routed = sum(v["routed_to_ds"] for v in report.hybrid.values())
    total = sum(v["total"] for v in report.hybrid.values())
    share = routed / total
    ok = not bad and frac >= 0.7 and share < 0.5
    assert record(8, ok, f"bitwise mismatches {bad or 'none'}; hybrid >= max(7nn, DS-1pp) on {frac:.0%}; "
                         f"routed to DS {share:.1%}")


def test_c9_determinism(desk):
    report, _ = desk
    again = run_experiment(desk_preset())
    same = json.dumps(report.payload(), sort_keys=True) == json.dumps(again.payload(), sort_keys=True)
    assert record(9, same, "two desk runs, identical payloads" if same else "payloads differ")
