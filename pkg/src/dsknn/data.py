"""Datasets, CSV ingestion, standardization, stratified splits and toy generators."""
from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

__all__ = [
    "Dataset",
    "IngestError",
    "SplitSpec",
    "StandardizationStats",
    "SYNTHETIC_KINDS",
    "apply_standardizer",
    "fit_standardizer",
    "generate_synthetic",
    "ingest_csv",
    "load_fixture",
    "fixture_names",
    "merge",
    "stratified_split",
    "write_csv",
]

DATA_DIR = Path(__file__).with_name("data")

# Cell values treated as "missing" rather than as a malformed token.
MISSING_TOKENS = frozenset({"", "?", "na", "n/a", "nan", "null", "none", "-nan", "inf", "-inf", "+inf"})


class IngestError(ValueError):
    """Raised when a CSV file cannot be turned into a Dataset."""


@dataclass(frozen=True, eq=False)
class Dataset:
    """Feature matrix plus dense integer labels.

    Parameters
    ----------
    features : array of shape (n, d)
    labels : array of shape (n,)
        Class indices in ``[0, class_count)``.
    class_count : int
    name : str
    label_names : tuple of str, optional
        Original label tokens, indexed by class index.
    rejected_rows : int
        Rows dropped during ingestion (missing or non-finite values).
    """

    features: np.ndarray
    labels: np.ndarray
    class_count: int
    name: str = "dataset"
    label_names: tuple = ()
    rejected_rows: int = 0

    def __post_init__(self):
        X = np.array(self.features, dtype=float, copy=True)
        y = np.array(self.labels, dtype=np.int64, copy=True).reshape(-1)
        if X.ndim == 1:
            X = X.reshape(-1, 1)
        if X.ndim != 2:
            raise ValueError("features must be a 2-D matrix")
        if X.shape[0] != y.shape[0]:
            raise ValueError(f"{X.shape[0]} feature rows but {y.shape[0]} labels")
        if not np.all(np.isfinite(X)):
            raise ValueError("features contain NaN or infinite values")
        if self.class_count < 2:
            raise ValueError("class_count must be at least 2")
        if y.size and (y.min() < 0 or y.max() >= self.class_count):
            raise ValueError("labels must lie in [0, class_count)")
        X.flags.writeable = False
        y.flags.writeable = False
        object.__setattr__(self, "features", X)
        object.__setattr__(self, "labels", y)
        names = tuple(str(s) for s in self.label_names) or tuple(str(c) for c in range(self.class_count))
        if len(names) != self.class_count:
            raise ValueError("label_names must have one entry per class")
        object.__setattr__(self, "label_names", names)

    @property
    def n_samples(self) -> int:
        return self.features.shape[0]

    @property
    def n_features(self) -> int:
        return self.features.shape[1]

    def __len__(self):
        return self.n_samples

    def class_counts(self) -> np.ndarray:
        return np.bincount(self.labels, minlength=self.class_count)

    def check_complete(self):
        """Require every class to be present and ``n >= class_count``."""
        counts = self.class_counts()
        missing = [self.label_names[c] for c in np.flatnonzero(counts == 0)]
        if missing:
            raise ValueError(f"{self.name}: classes without instances: {missing}")
        if self.n_samples < self.class_count:
            raise ValueError(f"{self.name}: fewer samples than classes")
        return self

    def subset(self, indices, name=None) -> "Dataset":
        idx = np.asarray(indices, dtype=np.int64)
        return replace(self, features=self.features[idx], labels=self.labels[idx],
                       name=name or self.name, rejected_rows=0)

    def with_features(self, features) -> "Dataset":
        return replace(self, features=features)


def merge(a: Dataset, b: Dataset, name=None) -> Dataset:
    """Row-wise concatenation of two partitions of the same problem."""
    if a.class_count != b.class_count or a.n_features != b.n_features:
        raise ValueError("datasets are not compatible")
    return replace(a, features=np.vstack([a.features, b.features]),
                   labels=np.concatenate([a.labels, b.labels]),
                   name=name or a.name, rejected_rows=0)


# ---------------------------------------------------------------------------
# CSV


def _parse_float(token):
    try:
        return float(token)
    except ValueError:
        return None


def ingest_csv(path, label_column=-1, header=None, name=None) -> Dataset:
    """Read a comma-separated file into a :class:`Dataset`.

    Labels are re-encoded to ``0..M-1`` in order of first appearance.
    Rows with a missing or non-finite feature are dropped and counted in
    ``rejected_rows``. A feature cell holding any other non-numeric token
    makes the column mixed-type, which is an error.

    Parameters
    ----------
    path : str or Path
    label_column : int or str
        Zero-based index (negative allowed) or header name.
    header : bool or None
        ``None`` sniffs: the first row is a header when ``label_column`` is a
        name or when none of its feature cells parse as numbers.
    name : str, optional
        Defaults to the file stem.
    """
    path = Path(path)
    if not path.is_file():
        raise IngestError(f"no such file: {path}")
    with open(path, newline="", encoding="utf-8") as f:
        rows = [r for r in csv.reader(f) if r and any(c.strip() for c in r)]
    if not rows:
        raise IngestError(f"{path}: empty file")

    width = len(rows[0])
    if header is None:
        if isinstance(label_column, str):
            header = True
        else:
            li = label_column % width
            cells = [c for j, c in enumerate(rows[0]) if j != li]
            header = all(_parse_float(c) is None for c in cells)
    columns = [c.strip() for c in rows[0]] if header else None
    body = rows[1:] if header else rows
    if not body:
        raise IngestError(f"{path}: no data rows")

    if isinstance(label_column, str):
        if columns is None or label_column not in columns:
            raise IngestError(f"{path}: label column {label_column!r} not found")
        li = columns.index(label_column)
    else:
        if not -width <= label_column < width:
            raise IngestError(f"{path}: label column {label_column} out of range")
        li = label_column % width

    features, raw_labels, rejected = [], [], 0
    for lineno, row in enumerate(body, start=2 if header else 1):
        if len(row) != width:
            raise IngestError(f"{path}:{lineno}: expected {width} fields, got {len(row)}")
        label = row[li].strip()
        values, bad = [], False
        for j, cell in enumerate(row):
            if j == li:
                continue
            token = cell.strip()
            v = _parse_float(token)
            if v is None:
                if token.lower() in MISSING_TOKENS:
                    bad = True
                    continue
                col = columns[j] if columns else j
                raise IngestError(f"{path}:{lineno}: non-numeric value {token!r} in feature column {col!r}")
            if not math.isfinite(v):
                bad = True
            values.append(v)
        if bad or label.lower() in MISSING_TOKENS:
            rejected += 1
            continue
        features.append(values)
        raw_labels.append(label)

    codes = {}
    for lab in raw_labels:
        codes.setdefault(lab, len(codes))
    if len(codes) < 2:
        raise IngestError(f"{path}: need at least 2 distinct labels, found {len(codes)}")
    labels = np.array([codes[lab] for lab in raw_labels], dtype=np.int64)
    return Dataset(
        features=np.array(features, dtype=float).reshape(len(features), width - 1),
        labels=labels,
        class_count=len(codes),
        name=name or path.stem,
        label_names=tuple(codes),
        rejected_rows=rejected,
    ).check_complete()


def write_csv(ds: Dataset, path, header=True, label_column="label"):
    """Write features then the label name column; floats are written with ``repr``."""
    path = Path(path)
    with open(path, "w", newline="", encoding="utf-8") as f:
        w = csv.writer(f)
        if header:
            w.writerow([f"x{j}" for j in range(ds.n_features)] + [label_column])
        for row, lab in zip(ds.features, ds.labels):
            w.writerow([repr(float(v)) for v in row] + [ds.label_names[lab]])
    return path


FIXTURE_LABELS = {"wine": "class", "iris": "class", "wdbc": "diagnosis", "anes96": "vote", "fair": "had_affair"}


def fixture_names():
    return sorted(FIXTURE_LABELS)


def load_fixture(name) -> Dataset:
    """Load one of the bundled CSV fixtures by name."""
    if name not in FIXTURE_LABELS:
        raise KeyError(f"unknown fixture {name!r}; available: {fixture_names()}")
    return ingest_csv(DATA_DIR / f"{name}.csv", label_column=FIXTURE_LABELS[name], name=name)


# ---------------------------------------------------------------------------
# splitting


@dataclass(frozen=True)
class SplitSpec:
    train_fraction: float = 0.25
    dsel_fraction: float = 0.50
    test_fraction: float = 0.25
    seed: int = 0
    replications: int = 20

    def __post_init__(self):
        fr = self.fractions
        if any(f <= 0 for f in fr):
            raise ValueError("every split fraction must be positive")
        if abs(sum(fr) - 1.0) > 1e-9:
            raise ValueError(f"split fractions sum to {sum(fr)}, not 1")
        if self.replications < 1:
            raise ValueError("replications must be positive")

    @property
    def fractions(self):
        return (self.train_fraction, self.dsel_fraction, self.test_fraction)


def _largest_remainder(total, fractions):
    exact = np.asarray(fractions, dtype=float) * total
    out = np.floor(exact).astype(np.int64)
    order = np.argsort(-(exact - out), kind="stable")
    out[order[: total - out.sum()]] += 1
    return out


def _allocate(class_counts, fractions):
    """Integer class x partition table with exact row sums and partition totals.

    Each cell is the floor or ceiling of its exact share. Leftover units are
    handed out class by class (largest leftover first) to the partitions with
    the largest remaining deficit, which always succeeds for this kind of
    matrix rounding problem.
    """
    fractions = np.asarray(fractions, dtype=float)
    counts = np.asarray(class_counts, dtype=np.int64)
    exact = counts[:, None] * fractions[None, :]
    table = np.floor(exact).astype(np.int64)
    frac = exact - table
    deficit = _largest_remainder(int(counts.sum()), fractions) - table.sum(axis=0)
    leftover = counts - table.sum(axis=1)
    for c in sorted(range(len(counts)), key=lambda c: (-leftover[c], c)):
        # largest remaining deficit first, then largest fractional share
        prefs = sorted(range(len(fractions)), key=lambda p: (-deficit[p], -frac[c, p], p))
        for p in prefs[: leftover[c]]:
            table[c, p] += 1
            deficit[p] -= 1
    # keep at least one instance of each class in every partition
    for c in range(len(counts)):
        for p in np.flatnonzero(table[c] == 0):
            donor = int(np.argmax(table[c]))
            table[c, donor] -= 1
            table[c, p] += 1
    return _repair_priors(table, exact)


def _prior_violation(table):
    """Total excess of |prior_p(c) - prior(c)| over 1/|p|, plus the distance of
    the partition totals from their exact shares (second key)."""
    counts = table.sum(axis=1)
    sizes = table.sum(axis=0)
    dev = np.abs(table / sizes - (counts / counts.sum())[:, None])
    return float(np.maximum(dev - 1.0 / sizes, 0).sum())


def _repair_priors(table, exact):
    """Greedy single-unit moves within a class that lower the prior violation
    while keeping every cell >= 1 and within one of its exact share.

    Tiny classes can force a partition total away from its share, which is
    what pushes another class's prior out of bounds; moving one unit of the
    big class usually fixes it.
    """
    table = table.copy()
    n_cls, n_part = table.shape
    best = _prior_violation(table)
    while best > 1e-12:
        move = None
        for c in range(n_cls):
            for p in range(n_part):
                if table[c, p] - 1 < max(1, exact[c, p] - 1 - 1e-9):
                    continue
                for q in range(n_part):
                    if q == p or table[c, q] + 1 > exact[c, q] + 1 + 1e-9:
                        continue
                    table[c, p] -= 1
                    table[c, q] += 1
                    v = _prior_violation(table)
                    table[c, p] += 1
                    table[c, q] -= 1
                    if v < best - 1e-12:
                        best, move = v, (c, p, q)
        if move is None:
            break
        c, p, q = move
        table[c, p] -= 1
        table[c, q] += 1
    return table


def stratified_split(ds: Dataset, spec: SplitSpec, replication_index: int = 0):
    """Split into (train, dsel, test) preserving class priors.

    Randomness comes from ``SeedSequence([seed, replication_index])`` so each
    replication is independent and reproducible.
    """
    counts = ds.class_counts()
    for c, n_c in enumerate(counts):
        if n_c < 3:
            raise ValueError(
                f"{ds.name}: class {ds.label_names[c]!r} has {n_c} instance(s); "
                "stratified splitting needs at least 3")
    rng = np.random.default_rng([int(spec.seed) & (2**64 - 1), int(replication_index)])
    table = _allocate(counts, spec.fractions)
    parts = [[], [], []]
    for c in range(ds.class_count):
        idx = rng.permutation(np.flatnonzero(ds.labels == c))
        start = 0
        for p in range(3):
            parts[p].append(idx[start: start + table[c, p]])
            start += table[c, p]
    names = ("train", "dsel", "test")
    return tuple(
        ds.subset(np.sort(np.concatenate(parts[p])), name=f"{ds.name}/{names[p]}")
        for p in range(3)
    )


# ---------------------------------------------------------------------------
# standardization


@dataclass(frozen=True, eq=False)
class StandardizationStats:
    mean: np.ndarray
    std: np.ndarray
    zero_variance: np.ndarray = field(default=None)

    @property
    def scale(self):
        return np.where(self.zero_variance, 1.0, self.std)


def fit_standardizer(train: Dataset) -> StandardizationStats:
    """Per-feature mean and population standard deviation of the training rows."""
    X = train.features
    if X.shape[0] == 0:
        raise ValueError("cannot standardize an empty dataset")
    mean = X.mean(axis=0)
    std = X.std(axis=0)
    zero = std <= 1e-12 * np.maximum(1.0, np.abs(mean))
    return StandardizationStats(mean=mean, std=std, zero_variance=zero)


def apply_standardizer(stats: StandardizationStats, ds: Dataset) -> Dataset:
    return ds.with_features((ds.features - stats.mean) / stats.scale)


# ---------------------------------------------------------------------------
# synthetic two-class problems
#
# Every generator places class 0 in the first n/2 rows and adds isotropic
# Gaussian noise with standard deviation ``noise`` to points on a noiseless
# template, so ``noise=0`` returns the template itself.

BANANA_RADIUS = 5.0
BANANA_SPAN = (-0.1 * np.pi, 1.1 * np.pi)   # class 0 arc; class 1 is rotated by pi
BANANA_OFFSET = np.array([BANANA_RADIUS, 0.5 * BANANA_RADIUS])
LITHUANIAN_RADII = (4.0, 5.5)               # concentric half rings


def _banana_template(rng, half):
    t0 = rng.uniform(*BANANA_SPAN, size=half)
    t1 = rng.uniform(*BANANA_SPAN, size=half) + np.pi
    a = BANANA_RADIUS * np.column_stack([np.cos(t0), np.sin(t0)])
    b = BANANA_RADIUS * np.column_stack([np.cos(t1), np.sin(t1)]) + BANANA_OFFSET
    return a, b


def _lithuanian_template(rng, half):
    t0 = rng.uniform(0.0, np.pi, size=half)
    t1 = rng.uniform(0.0, np.pi, size=half)
    a = LITHUANIAN_RADII[0] * np.column_stack([np.cos(t0), np.sin(t0)])
    b = LITHUANIAN_RADII[1] * np.column_stack([np.cos(t1), np.sin(t1)])
    return a, b


def _moons_template(rng, half):
    t0 = rng.uniform(0.0, np.pi, size=half)
    t1 = rng.uniform(0.0, np.pi, size=half)
    a = np.column_stack([np.cos(t0), np.sin(t0)])
    b = np.column_stack([1.0 - np.cos(t1), 0.5 - np.sin(t1)])
    return a, b


def _circles_template(rng, half):
    t0 = rng.uniform(0.0, 2 * np.pi, size=half)
    t1 = rng.uniform(0.0, 2 * np.pi, size=half)
    a = np.column_stack([np.cos(t0), np.sin(t0)])
    b = 0.5 * np.column_stack([np.cos(t1), np.sin(t1)])
    return a, b


def _xor_template(rng, half):
    corners = np.array([[1.0, 1.0], [-1.0, -1.0], [1.0, -1.0], [-1.0, 1.0]])
    a = corners[:2][rng.integers(0, 2, size=half)]
    b = corners[2:][rng.integers(0, 2, size=half)]
    return a, b


SYNTHETIC_KINDS = {
    "banana": _banana_template,
    "lithuanian": _lithuanian_template,
    "moons": _moons_template,
    "circles": _circles_template,
    "xor": _xor_template,
}


def generate_synthetic(kind, n=1000, noise=0.1, seed=0, name=None) -> Dataset:
    """Two-class 2-D toy problem with ``n/2`` instances per class.

    kinds: ``banana`` (two interleaved arcs of radius 5), ``lithuanian``
    (concentric half rings of radii 4 and 5.5), ``moons`` (unit-radius
    interleaved half circles), ``circles`` (radii 1 and 0.5) and ``xor``
    (four corners of the square with side 2).
    """
    if kind not in SYNTHETIC_KINDS:
        raise ValueError(f"unknown synthetic kind {kind!r}; choose from {sorted(SYNTHETIC_KINDS)}")
    if n < 4 or n % 2:
        raise ValueError("n must be even and at least 4")
    if noise < 0:
        raise ValueError("noise must be nonnegative")
    rng = np.random.default_rng(seed)
    half = n // 2
    a, b = SYNTHETIC_KINDS[kind](rng, half)
    X = np.vstack([a, b])
    if noise > 0:
        X = X + rng.normal(scale=noise, size=X.shape)
    y = np.repeat([0, 1], half)
    return Dataset(X, y, 2, name=name or f"{kind}", label_names=("0", "1")).check_complete()
