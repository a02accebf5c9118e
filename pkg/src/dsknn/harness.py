"""Replicated DS-vs-K-NN experiments: configuration, runner and reports."""
from __future__ import annotations

import copy
import hashlib
import json
import logging
import os
import platform
import time
from dataclasses import asdict, dataclass, field
from pathlib import Path

import numpy as np
import yaml
from scipy.stats import rankdata

from . import __version__
from .data import (Dataset, SplitSpec, apply_standardizer, fit_standardizer, generate_synthetic, ingest_csv,
                   load_fixture, merge, stratified_split)
from .evaluation import (Z_VALUES, ResultsTable, friedman_ranks, sign_test, sign_test_critical,
                         win_tie_loss)
from .hardness import HybridClassifier, bin_by_hardness
from .pool import ClassifierPool, OracleMatrix, PerceptronParams, bagging_generate, build_oracle_matrix
from .region import KNNClassifier, knn_search
from .selector import RULES, DynamicSelector

__all__ = [
    "CONFIG_SCHEMA",
    "REPORT_SCHEMA",
    "ExperimentConfig",
    "ExperimentReport",
    "Replication",
    "desk_preset",
    "full_preset",
    "load_dataset",
    "prepare_replication",
    "report_render",
    "run_experiment",
]

log = logging.getLogger(__name__)

CONFIG_SCHEMA = "dsknn.config/1"
REPORT_SCHEMA = "dsknn.report/1"
OUTPUT_ENV = "DSKNN_OUTPUT_DIR"

ALL_RULES = ("ola", "lca", "mla", "rank", "mcb", "apriori", "aposteriori",
             "knora-e", "knora-u", "knop", "des-p", "des-kl", "des-knn", "des-clustering")
HARDNESS_REFERENCES = ("train+dsel", "dsel")
RULE_PARAMS = ("mcb_threshold", "selection_margin", "n_frac", "j_frac", "n_clusters")


@dataclass
class ExperimentConfig:
    """Everything a run needs; unspecified keys take the full-scale defaults.

    ``datasets`` entries are mappings with a ``name`` and one source:
    ``fixture: <name>``, ``path: <csv>`` (plus optional ``label_column``), or
    ``synthetic: <kind>`` (plus ``n``, ``noise``, ``seed``).
    ``techniques`` entries are rule names or ``{name: ..., <param>: ...}``.
    """

    datasets: list = field(default_factory=list)
    techniques: list = field(default_factory=lambda: list(ALL_RULES))
    baselines: list = field(default_factory=lambda: [1, 7])
    K: int = 7
    pool_size: int = 100
    learning_rate: float = 1.0
    epochs: int = 100
    train_fraction: float = 0.25
    dsel_fraction: float = 0.50
    test_fraction: float = 0.25
    replications: int = 20
    mcb_threshold: float = 0.7
    selection_margin: float = 0.0
    n_frac: float = 0.5
    j_frac: float = 0.3
    n_clusters: int = 5
    hardness: bool = True
    hardness_reference: str = "train+dsel"
    hybrid: dict = field(default_factory=lambda: {"enabled": True, "tau": 0.4, "ds_rule": "knora-u"})
    output_dir: str = "results"
    seed: int = 0
    name: str = "experiment"
    schema: str = CONFIG_SCHEMA

    def __post_init__(self):
        self.validate()

    def validate(self):
        if self.schema != CONFIG_SCHEMA:
            raise ValueError(f"unsupported config schema {self.schema!r}")
        if self.K < 1:
            raise ValueError("K must be at least 1")
        if self.pool_size < 1:
            raise ValueError("pool_size must be at least 1")
        if not self.techniques and not self.baselines:
            raise ValueError("the technique roster is empty")
        for t in self.techniques:
            rule = t if isinstance(t, str) else t.get("name")
            if rule not in RULES:
                raise ValueError(f"unknown technique {rule!r}")
        if self.hardness_reference not in HARDNESS_REFERENCES:
            raise ValueError(f"hardness_reference must be one of {HARDNESS_REFERENCES}")
        hy = self.hybrid or {}
        if hy.get("enabled") and hy.get("ds_rule", "knora-u") not in RULES:
            raise ValueError(f"unknown hybrid DS rule {hy.get('ds_rule')!r}")
        self.split_spec()
        return self

    def split_spec(self):
        return SplitSpec(self.train_fraction, self.dsel_fraction, self.test_fraction, self.seed,
                         self.replications)

    def to_dict(self):
        return copy.deepcopy(asdict(self))

    @classmethod
    def from_dict(cls, d):
        known = set(cls.__dataclass_fields__)
        unknown = set(d) - known
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**copy.deepcopy(d))

    def dump(self, path):
        Path(path).write_text(yaml.safe_dump(self.to_dict(), sort_keys=False))
        return Path(path)

    @classmethod
    def load(cls, path):
        return cls.from_dict(yaml.safe_load(Path(path).read_text()) or {})

    def digest(self):
        blob = json.dumps(self.to_dict(), sort_keys=True).encode()
        return hashlib.sha256(blob).hexdigest()

    # technique naming -------------------------------------------------------

    def roster(self):
        """``[(column name, rule, params)]`` for every DS technique."""
        out = []
        for t in self.techniques:
            spec = {"name": t} if isinstance(t, str) else dict(t)
            rule = spec.pop("name")
            label = spec.pop("label", rule)
            params = {k: getattr(self, k) for k in RULE_PARAMS}
            params.update(spec)
            out.append((label, rule, params))
        return out


DESK_SYNTHETIC = [
    ("banana", 1.0),
    ("lithuanian", 0.7),
    ("moons", 0.3),
    ("circles", 0.15),
    ("xor", 0.5),
]
DESK_FIXTURES = ["wine", "iris", "wdbc", "anes96", "fair"]


def desk_preset(**overrides) -> ExperimentConfig:
    """Five synthetic and five bundled datasets, pool 25, 5 replications."""
    datasets = [{"name": k, "synthetic": k, "n": 1000, "noise": s, "seed": 1} for k, s in DESK_SYNTHETIC]
    datasets += [{"name": f, "fixture": f} for f in DESK_FIXTURES]
    kw = dict(datasets=datasets, pool_size=25, replications=5, name="desk")
    kw.update(overrides)
    return ExperimentConfig(**kw)


def full_preset(**overrides) -> ExperimentConfig:
    """Full protocol: pool 100, K = 7, 20 replications, 25/50/25 splits."""
    cfg = desk_preset(pool_size=100, replications=20, name="full")
    for k, v in overrides.items():
        setattr(cfg, k, v)
    return cfg.validate()


def load_dataset(spec: dict, base_dir=None):
    spec = dict(spec)
    name = spec.get("name")
    if "fixture" in spec:
        ds = load_fixture(spec["fixture"])
    elif "synthetic" in spec:
        ds = generate_synthetic(spec["synthetic"], spec.get("n", 1000), spec.get("noise", 0.1),
                                spec.get("seed", 0))
    elif "path" in spec:
        path = Path(spec["path"])
        if base_dir is not None and not path.is_absolute():
            path = Path(base_dir) / path
        ds = ingest_csv(path, spec.get("label_column", -1), spec.get("header"))
    else:
        raise ValueError(f"dataset entry {spec!r} has no fixture, synthetic or path source")
    if name:
        ds = ds.subset(np.arange(ds.n_samples), name=name)
    return ds


def _stream(master, name, *tail):
    """Seed stream keyed by dataset name, so dataset order never matters."""
    key = int.from_bytes(hashlib.sha256(name.encode()).digest()[:8], "little")
    return np.random.SeedSequence([int(master) & (2**64 - 1), key, *tail]).generate_state(2)


def _seed_int(state):
    return int(state[0]) << 32 | int(state[1])


# ---------------------------------------------------------------------------
# report


@dataclass(eq=False)
class ExperimentReport:
    """Accuracies per (dataset, replication, technique) plus derived statistics."""

    config: dict
    datasets: list
    techniques: list
    records: list
    hardness: dict
    hybrid: dict
    failures: list
    provenance: dict
    schema: str = REPORT_SCHEMA

    # derived --------------------------------------------------------------

    def table(self) -> ResultsTable:
        acc = {}
        for r in self.records:
            acc.setdefault((r["dataset"], r["technique"]), []).append(r["accuracy"])
        shape = (len(self.datasets), len(self.techniques))
        mean = np.array([[np.mean(acc[(d, t)]) for t in self.techniques] for d in self.datasets],
                        dtype=float).reshape(shape)
        std = np.array([[np.std(acc[(d, t)]) for t in self.techniques] for d in self.datasets],
                       dtype=float).reshape(shape)
        return ResultsTable(self.datasets, self.techniques, mean, std)

    def ranks(self):
        return friedman_ranks(self.table())

    def baselines(self):
        return [t for t in self.techniques if t.endswith("nn") and t[:-2].isdigit()]

    def win_tie_loss(self):
        table = self.table()
        return {b: win_tie_loss(table, b) for b in self.baselines()}

    def sign_tests(self):
        out = {}
        for base, per in self.win_tie_loss().items():
            out[base] = {t: {str(a): sign_test(w, a) for a in Z_VALUES} for t, w in per.items() if t != base}
        return out

    def bin_accuracy(self, dataset, technique):
        h = self.hardness[dataset]
        counts = np.asarray(h["counts"])
        correct = np.asarray(h["correct"][technique])
        return {int(m): float(correct[m] / counts[m]) for m in np.flatnonzero(counts)}

    # serialisation ----------------------------------------------------------

    def to_dict(self):
        return {
            "schema": self.schema,
            "config": self.config,
            "datasets": list(self.datasets),
            "techniques": list(self.techniques),
            "records": self.records,
            "hardness": self.hardness,
            "hybrid": self.hybrid,
            "failures": self.failures,
            "provenance": self.provenance,
        }

    def payload(self):
        """Report content without wall-clock fields."""
        d = copy.deepcopy(self.to_dict())
        d["provenance"].pop("created", None)
        d["provenance"].pop("elapsed_seconds", None)
        return d

    def summary(self):
        table = self.table()
        return {
            "ranks": self.ranks() if self.datasets else {},
            "mean_accuracy": dict(zip(self.techniques, table.mean.mean(axis=0).tolist())) if self.datasets else {},
            "win_tie_loss": {b: {t: [w.wins, w.ties, w.losses] for t, w in per.items()}
                             for b, per in self.win_tie_loss().items()} if self.datasets else {},
            "sign_tests": self.sign_tests() if self.datasets else {},
        }

    def to_json(self, indent=None):
        d = self.to_dict()
        d["summary"] = self.summary()
        return json.dumps(d, indent=indent)

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        d.pop("summary", None)
        if d.get("schema") != REPORT_SCHEMA:
            raise ValueError(f"unsupported report schema {d.get('schema')!r}")
        return cls(**d)

    @classmethod
    def from_json(cls, text):
        return cls.from_dict(json.loads(text))

    @classmethod
    def load(cls, path):
        return cls.from_json(Path(path).read_text())

    def __eq__(self, other):
        return isinstance(other, ExperimentReport) and self.to_dict() == other.to_dict()


# ---------------------------------------------------------------------------
# runner


@dataclass(frozen=True, eq=False)
class Replication:
    """Standardized partitions, pool and oracle of one (dataset, replication)."""

    train: Dataset
    dsel: Dataset
    test: Dataset
    pool: ClassifierPool
    oracle: OracleMatrix
    selector_seed: int

    @property
    def reference(self):
        """train + DSEL, the K-NN baseline's training data."""
        return merge(self.train, self.dsel, name=f"{self.train.name.split('/')[0]}/train+dsel")


def prepare_replication(ds, cfg: ExperimentConfig, rep) -> Replication:
    """Exactly the split, scaling and pool ``run_experiment`` uses for ``rep``."""
    name = ds.name
    spec = SplitSpec(cfg.train_fraction, cfg.dsel_fraction, cfg.test_fraction,
                     _seed_int(_stream(cfg.seed, name, 0)), cfg.replications)
    train, dsel, test = stratified_split(ds, spec, rep)
    stats = fit_standardizer(train)
    train, dsel, test = (apply_standardizer(stats, p) for p in (train, dsel, test))
    pool = bagging_generate(train, cfg.pool_size, PerceptronParams(cfg.learning_rate, cfg.epochs),
                            seed=_seed_int(_stream(cfg.seed, name, 1, rep)))
    return Replication(train, dsel, test, pool, build_oracle_matrix(pool, dsel),
                       _seed_int(_stream(cfg.seed, name, 2, rep)))


def _run_replication(ds, cfg: ExperimentConfig, rep, roster, hy):
    r = prepare_replication(ds, cfg, rep)
    train, dsel, test, pool, oracle = r.train, r.dsel, r.test, r.pool, r.oracle
    reference = r.reference
    neighbors = knn_search(dsel.features, test.features, cfg.K)
    profiles = pool.predict(test.features)

    preds = {}
    for label, rule, params in roster:
        sel = DynamicSelector(rule, K=cfg.K, seed=r.selector_seed, **params)
        preds[label] = sel.fit(pool, dsel, oracle).predict(test.features, neighbors, profiles)
    for k in cfg.baselines:
        preds[f"{k}nn"] = KNNClassifier(k).fit(reference).predict(test.features)

    routed = None
    if hy.get("enabled"):
        rule = hy.get("ds_rule", "knora-u")
        params = {k: getattr(cfg, k) for k in RULE_PARAMS}
        ds_sel = DynamicSelector(rule, K=cfg.K, seed=r.selector_seed, **params)
        hybrid = HybridClassifier(ds_sel, tau=hy.get("tau", 0.4), K=cfg.K).fit(train, dsel, pool, oracle)
        reuse = next((preds[lab] for lab, r, p in roster if r == rule and p == params), None)
        if reuse is None:
            reuse = ds_sel.predict(test.features, neighbors, profiles)
        preds[f"hybrid-{rule}"], routes = hybrid.predict(test.features, reuse, return_routes=True)
        routed = int((routes == "ds").sum())

    kdn_ref = reference if cfg.hardness_reference == "train+dsel" else dsel
    bins = bin_by_hardness(test, kdn_ref, cfg.K) if cfg.hardness else None
    if bins is not None:
        for t, p in preds.items():
            bins.add(t, p)
    acc = {t: float(np.mean(p == test.labels) * 100.0) for t, p in preds.items()}
    return acc, bins, routed, test.n_samples


def run_experiment(config: ExperimentConfig, base_dir=None) -> ExperimentReport:
    """Split, train, select and score every (dataset, replication, technique).

    A dataset that fails to load or run is recorded in ``failures`` and
    dropped from the tables; the sweep carries on.
    """
    config.validate()
    t0 = time.time()
    roster = config.roster()
    hy = dict(config.hybrid or {})
    techniques = [label for label, _, _ in roster] + [f"{k}nn" for k in config.baselines]
    if hy.get("enabled"):
        techniques.append(f"hybrid-{hy.get('ds_rule', 'knora-u')}")

    records, hardness, hybrid, failures, done = [], {}, {}, [], []
    for spec in config.datasets:
        name = spec.get("name") or spec.get("fixture") or spec.get("synthetic") or str(spec.get("path"))
        try:
            ds = load_dataset({**spec, "name": name}, base_dir)
            rows, counts, correct, routed, total = [], None, {}, 0, 0
            for rep in range(config.replications):
                acc, bins, n_ds, n_test = _run_replication(ds, config, rep, roster, hy)
                rows += [{"dataset": name, "replication": rep, "technique": t, "accuracy": acc[t]}
                         for t in techniques]
                if bins is not None:
                    counts = bins.counts if counts is None else counts + bins.counts
                    for t, c in bins.correct.items():
                        correct[t] = c if t not in correct else correct[t] + c
                if n_ds is not None:
                    routed += n_ds
                    total += n_test
        except Exception as exc:   # quarantine the dataset, keep sweeping
            log.warning("dataset %s failed: %s", name, exc)
            failures.append({"dataset": name, "error": f"{type(exc).__name__}: {exc}"})
            continue
        records += rows
        done.append(name)
        if counts is not None:
            hardness[name] = {"K": config.K, "counts": counts.astype(int).tolist(),
                              "correct": {t: correct[t].astype(int).tolist() for t in techniques}}
        if hy.get("enabled"):
            hybrid[name] = {"routed_to_ds": routed, "total": total, "tau": hy.get("tau", 0.4)}

    provenance = {
        "config_hash": config.digest(),
        "seed": config.seed,
        "versions": {"dsknn": __version__, "numpy": np.__version__, "python": platform.python_version()},
        "created": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "elapsed_seconds": round(time.time() - t0, 3),
    }
    return ExperimentReport(config.to_dict(), done, techniques, records, hardness, hybrid, failures,
                            provenance)


# ---------------------------------------------------------------------------
# rendering


def _hardness_rows(report):
    rows = []
    pooled_counts, pooled_correct = None, {}
    for name in report.datasets:
        h = report.hardness.get(name)
        if not h:
            continue
        counts = np.asarray(h["counts"])
        pooled_counts = counts if pooled_counts is None else pooled_counts + counts
        for t in report.techniques:
            c = np.asarray(h["correct"][t])
            pooled_correct[t] = c if t not in pooled_correct else pooled_correct[t] + c
            for m in np.flatnonzero(counts):
                rows.append([name, int(m), m / h["K"], int(counts[m]), t, c[m] / counts[m]])
    if pooled_counts is not None:
        K = len(pooled_counts) - 1
        for t in report.techniques:
            for m in np.flatnonzero(pooled_counts):
                rows.append(["ALL", int(m), m / K, int(pooled_counts[m]), t,
                             pooled_correct[t][m] / pooled_counts[m]])
    return rows


def _markdown(report):
    table = report.table()
    ranks = report.ranks()
    mean_acc = table.mean.mean(axis=0)
    sd_acc = table.mean.std(axis=0)
    rank_mat = None
    if report.datasets:
        rank_mat = rankdata(-table.rounded(), method="average", axis=1)
    by_rank = sorted(range(len(report.techniques)), key=lambda j: (ranks[report.techniques[j]], j))
    by_acc = sorted(range(len(report.techniques)), key=lambda j: (-mean_acc[j], j))
    out = [f"# {report.config.get('name', 'experiment')}", "",
           f"{len(report.datasets)} datasets, {report.config.get('replications')} replications, "
           f"pool {report.config.get('pool_size')}, K = {report.config.get('K')}.", "",
           "## Overall results", "",
           "| Algorithm | Avg. Rank | Algorithm | Avg. Accuracy |", "|---|---|---|---|"]
    for jr, ja in zip(by_rank, by_acc):
        r_sd = rank_mat[:, jr].std() if rank_mat is not None else 0.0
        out.append(f"| {report.techniques[jr]} | {ranks[report.techniques[jr]]:.2f}({r_sd:.2f}) "
                   f"| {report.techniques[ja]} | {mean_acc[ja]:.2f}({sd_acc[ja]:.2f}) |")
    out += ["", "## Accuracy per dataset (mean (std) over replications)", "",
            "| dataset | " + " | ".join(report.techniques) + " |",
            "|---|" + "---|" * len(report.techniques)]
    for i, d in enumerate(report.datasets):
        cells = [f"{table.mean[i, j]:.2f}({table.std[i, j]:.2f})" for j in range(len(report.techniques))]
        out.append(f"| {d} | " + " | ".join(cells) + " |")
    for base, per in report.win_tie_loss().items():
        n = len(report.datasets)
        out += ["", f"## Wins / ties / losses against {base}", ""]
        if n:
            crit = ", ".join(f"alpha={a}: {sign_test_critical(n, a)}" for a in Z_VALUES)
            out += [f"Critical win counts over {n} datasets: {crit}.", ""]
        out += ["| technique | wins | ties | losses |", "|---|---|---|---|"]
        for t, w in per.items():
            if t != base:
                out.append(f"| {t} | {w.wins} | {w.ties} | {w.losses} |")
    if report.hybrid:
        out += ["", "## Hybrid routing", "", "| dataset | routed to DS | test queries |", "|---|---|---|"]
        for d, h in report.hybrid.items():
            out.append(f"| {d} | {h['routed_to_ds']} | {h['total']} |")
    if report.failures:
        out += ["", "## Failed datasets", ""] + [f"- {f['dataset']}: {f['error']}" for f in report.failures]
    out += ["", "Per-bin hardness curves: see `hardness.csv`.", ""]
    return "\n".join(out)


def report_render(report: ExperimentReport, fmt="json", out_dir=None):
    """Write the report in ``fmt`` (json, csv or markdown); returns the written paths.

    ``out_dir`` defaults to ``$DSKNN_OUTPUT_DIR`` and then to the config's
    ``output_dir``.
    """
    out_dir = Path(out_dir or os.environ.get(OUTPUT_ENV) or report.config.get("output_dir", "results"))
    out_dir.mkdir(parents=True, exist_ok=True)
    if fmt == "json":
        p = out_dir / "report.json"
        p.write_text(report.to_json(indent=1))
        return [p]
    if fmt == "csv":
        table = report.table()
        acc = out_dir / "accuracy.csv"
        acc.write_text(table.to_csv())
        std = out_dir / "accuracy_std.csv"
        std.write_text(table.to_csv(std=True))
        hard = out_dir / "hardness.csv"
        lines = ["dataset,bin,kdn,count,technique,accuracy"]
        lines += [f"{d},{m},{lvl:.6f},{c},{t},{a:.6f}" for d, m, lvl, c, t, a in _hardness_rows(report)]
        hard.write_text("\n".join(lines) + "\n")
        return [acc, std, hard]
    if fmt in ("markdown", "md"):
        p = out_dir / "report.md"
        p.write_text(_markdown(report))
        return [p]
    raise ValueError(f"unknown report format {fmt!r}; choose json, csv or markdown")
