"""Bagged pools of one-vs-rest perceptrons and their cached DSEL behaviour."""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .data import Dataset

__all__ = [
    "ClassifierPool",
    "LinearClassifier",
    "OracleMatrix",
    "PerceptronParams",
    "bagging_generate",
    "build_oracle_matrix",
    "load_pool",
    "save_pool",
    "softmax",
    "train_perceptron",
]

POOL_SCHEMA = "dsknn.pool/1"
MAX_BAG_RETRIES = 10


@dataclass(frozen=True)
class PerceptronParams:
    learning_rate: float = 1.0
    epochs: int = 100


def softmax(a, axis=-1):
    z = a - a.max(axis=axis, keepdims=True)
    e = np.exp(z)
    return e / e.sum(axis=axis, keepdims=True)


@dataclass(frozen=True, eq=False)
class LinearClassifier:
    """One row of weights per class; predicts the argmax activation.

    ``np.argmax`` returns the first maximum, so ties go to the lowest class.
    """

    weights: np.ndarray
    bias: np.ndarray
    params: PerceptronParams = field(default_factory=PerceptronParams)
    seed: int = 0
    epochs_run: int = 0

    @property
    def n_classes(self):
        return self.weights.shape[0]

    def decision_function(self, X):
        X = np.atleast_2d(X)
        return (self.weights[None, :, :] * X[:, None, :]).sum(axis=-1) + self.bias

    def predict(self, X):
        return np.argmax(self.decision_function(X), axis=1)

    def predict_proba(self, X):
        return softmax(self.decision_function(X))

    @classmethod
    def constant(cls, label, n_classes, n_features, params=None, seed=0):
        bias = np.zeros(n_classes)
        bias[label] = 1.0
        return cls(np.zeros((n_classes, n_features)), bias, params or PerceptronParams(), seed, 0)


def _fit_batch(X, Y, n_classes, params, seeds):
    """Train ``len(seeds)`` perceptrons side by side.

    ``X`` has shape (P, n, d) and ``Y`` (P, n): member p sees only its own
    bag. All members run the same step count per epoch, so each update is
    the same arithmetic a lone member would do; members that finish an epoch
    without a mistake are frozen.
    """
    P, n, d = X.shape
    W = np.zeros((P, n_classes, d))
    b = np.zeros((P, n_classes))
    T = np.where(Y[:, :, None] == np.arange(n_classes), 1.0, -1.0)     # (P, n, M)
    rngs = [np.random.default_rng(s) for s in seeds]
    active = np.ones(P, dtype=bool)
    epochs_run = np.zeros(P, dtype=np.int64)
    rows = np.arange(P)
    lr = params.learning_rate
    for _ in range(params.epochs):
        if not active.any():
            break
        order = np.stack([r.permutation(n) for r in rngs])             # (P, n)
        Xo = X[rows[:, None], order]                                    # (P, n, d)
        To = T[rows[:, None], order]                                    # (P, n, M)
        mistakes = np.zeros(P, dtype=np.int64)
        for step in range(n):
            x = Xo[:, step]
            t = To[:, step]
            act = np.einsum("pmd,pd->pm", W, x) + b
            upd = (t * act <= 0) & active[:, None]
            if upd.any():
                mistakes += upd.any(axis=1)
                delta = lr * t * upd
                W += delta[:, :, None] * x[:, None, :]
                b += delta
        epochs_run += active
        active &= mistakes > 0
    return W, b, epochs_run


def train_perceptron(train: Dataset, params: PerceptronParams | None = None, seed: int = 0) -> LinearClassifier:
    """Mistake-driven one-vs-rest perceptron.

    Stops early after an epoch without mistakes. A single-class training set
    yields a constant classifier for that class.
    """
    params = params or PerceptronParams()
    if train.n_samples == 0:
        raise ValueError("cannot train on an empty dataset")
    present = np.unique(train.labels)
    if present.size == 1:
        return LinearClassifier.constant(int(present[0]), train.class_count, train.n_features, params, seed)
    W, b, ep = _fit_batch(train.features[None], train.labels[None], train.class_count, params, [seed])
    return LinearClassifier(W[0], b[0], params, seed, int(ep[0]))


@dataclass(frozen=True, eq=False)
class ClassifierPool:
    """Ordered pool of linear classifiers with their bag provenance."""

    members: tuple
    bag_seeds: tuple = ()
    bag_indices: tuple = ()

    def __post_init__(self):
        object.__setattr__(self, "members", tuple(self.members))
        if not self.members:
            raise ValueError("a pool needs at least one member")
        W = np.stack([m.weights for m in self.members])
        B = np.stack([m.bias for m in self.members])
        object.__setattr__(self, "_W", W)
        object.__setattr__(self, "_B", B)

    def __len__(self):
        return len(self.members)

    def __getitem__(self, i):
        return self.members[i]

    @property
    def n_classes(self):
        return self._W.shape[1]

    def decision_function(self, X):
        """Activations of shape (pool_size, n, M)."""
        X = np.atleast_2d(X)
        return (self._W[:, None, :, :] * X[None, :, None, :]).sum(axis=-1) + self._B[:, None, :]

    def predict(self, X):
        """Hard predictions of shape (pool_size, n)."""
        return np.argmax(self.decision_function(X), axis=-1)

    def predict_proba(self, X):
        return softmax(self.decision_function(X))


def bagging_generate(train: Dataset, pool_size: int = 100, params: PerceptronParams | None = None,
                     seed: int = 0) -> ClassifierPool:
    """Bagging: member i trains on a with-replacement resample of size |train|.

    Bag i draws from ``SeedSequence([seed, i])``. A single-class bag is redrawn
    up to ten times and then kept as a constant classifier.
    """
    if pool_size < 1:
        raise ValueError("pool_size must be at least 1")
    params = params or PerceptronParams()
    X, y = train.features, train.labels
    n = train.n_samples
    bags, perceptron_seeds, constant = [], [], {}
    for i in range(pool_size):
        rng = np.random.default_rng([int(seed) & (2**64 - 1), i])
        for _ in range(MAX_BAG_RETRIES + 1):
            idx = rng.integers(0, n, size=n)
            if np.unique(y[idx]).size > 1:
                break
        else:
            warnings.warn(f"bag {i} holds a single class after {MAX_BAG_RETRIES} retries; "
                          "keeping a constant classifier", RuntimeWarning, stacklevel=2)
            constant[i] = int(y[idx[0]])
        bags.append(idx)
        perceptron_seeds.append(int(rng.integers(2**63)))

    members = [None] * pool_size
    fit = [i for i in range(pool_size) if i not in constant]
    if fit:
        B = np.stack([bags[i] for i in fit])
        W, bias, ep = _fit_batch(X[B], y[B], train.class_count, params, [perceptron_seeds[i] for i in fit])
        for k, i in enumerate(fit):
            members[i] = LinearClassifier(W[k], bias[k], params, perceptron_seeds[i], int(ep[k]))
    for i, label in constant.items():
        members[i] = LinearClassifier.constant(label, train.class_count, train.n_features, params,
                                               perceptron_seeds[i])
    return ClassifierPool(tuple(members), bag_seeds=tuple(perceptron_seeds), bag_indices=tuple(bags))


@dataclass(frozen=True, eq=False)
class OracleMatrix:
    """Per-classifier behaviour on DSEL.

    predictions : (pool_size, n_dsel) int
    correctness : (pool_size, n_dsel) bool
    soft_outputs : (pool_size, n_dsel, M) float
    """

    predictions: np.ndarray
    correctness: np.ndarray
    soft_outputs: np.ndarray
    labels: np.ndarray

    @property
    def pool_size(self):
        return self.predictions.shape[0]

    @property
    def n_classes(self):
        return self.soft_outputs.shape[2]


def build_oracle_matrix(pool: ClassifierPool, dsel: Dataset) -> OracleMatrix:
    act = pool.decision_function(dsel.features)
    pred = np.argmax(act, axis=-1)
    arrays = dict(
        predictions=pred,
        correctness=pred == dsel.labels[None, :],
        soft_outputs=softmax(act),
        labels=dsel.labels.copy(),
    )
    for a in arrays.values():
        a.flags.writeable = False
    return OracleMatrix(**arrays)


def save_pool(pool: ClassifierPool, path):
    """Write a pool checkpoint as JSON (schema ``dsknn.pool/1``).

    Layout: ``{"schema", "members": [{"weights", "bias", "seed", "epochs_run",
    "learning_rate", "epochs"}], "bag_seeds"}``. Floats are stored with full
    ``repr`` precision so reloading is exact.
    """
    doc = {
        "schema": POOL_SCHEMA,
        "members": [
            {
                "weights": m.weights.tolist(),
                "bias": m.bias.tolist(),
                "seed": m.seed,
                "epochs_run": m.epochs_run,
                "learning_rate": m.params.learning_rate,
                "epochs": m.params.epochs,
            }
            for m in pool.members
        ],
        "bag_seeds": list(pool.bag_seeds),
    }
    Path(path).write_text(json.dumps(doc))
    return Path(path)


def load_pool(path) -> ClassifierPool:
    doc = json.loads(Path(path).read_text())
    if doc.get("schema") != POOL_SCHEMA:
        raise ValueError(f"unsupported pool schema {doc.get('schema')!r}")
    members = [
        LinearClassifier(np.array(m["weights"], dtype=float), np.array(m["bias"], dtype=float),
                         PerceptronParams(m["learning_rate"], m["epochs"]), m["seed"], m["epochs_run"])
        for m in doc["members"]
    ]
    return ClassifierPool(tuple(members), bag_seeds=tuple(doc["bag_seeds"]))
