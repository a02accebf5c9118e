import numpy as np
import pytest

from dsknn.data import Dataset, generate_synthetic
from dsknn.pool import (
    ClassifierPool,
    LinearClassifier,
    PerceptronParams,
    bagging_generate,
    build_oracle_matrix,
    load_pool,
    save_pool,
    train_perceptron,
)


@pytest.fixture(scope="module")
def banana():
    return generate_synthetic("banana", 200, 0.5, seed=3)


def test_separable_toy_zero_errors():
    ds = Dataset([[-2.0, 0.0], [-1.0, 1.0], [1.0, -1.0], [2.0, 0.5]], [0, 0, 1, 1], 2)
    clf = train_perceptron(ds, seed=0)
    assert np.array_equal(clf.predict(ds.features), ds.labels)
    assert clf.epochs_run < 100


def test_single_class_bag_is_constant():
    ds = Dataset([[0.0], [1.0], [2.0]], [1, 1, 1], 3)
    clf = train_perceptron(ds)
    probe = np.linspace(-100, 100, 11)[:, None]
    assert np.all(clf.predict(probe) == 1)


def test_same_seed_bit_identical(banana):
    a = train_perceptron(banana, seed=7)
    b = train_perceptron(banana, seed=7)
    c = train_perceptron(banana, seed=8)
    assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
    assert not np.array_equal(a.weights, c.weights)


def _reference_perceptron(X, y, M, params, seed):
    """Plain-loop one-vs-rest perceptron, one sample at a time."""
    rng = np.random.default_rng(seed)
    W = np.zeros((M, X.shape[1]))
    b = np.zeros(M)
    for _ in range(params.epochs):
        mistakes = 0
        for i in rng.permutation(len(y)):
            t = np.where(np.arange(M) == y[i], 1.0, -1.0)
            act = W @ X[i] + b
            wrong = t * act <= 0
            if wrong.any():
                mistakes += 1
                W[wrong] += params.learning_rate * t[wrong, None] * X[i]
                b[wrong] += params.learning_rate * t[wrong]
        if mistakes == 0:
            break
    return W, b


def test_matches_plain_loop_perceptron():
    rng = np.random.default_rng(0)
    X = rng.normal(size=(40, 3))
    y = rng.integers(0, 3, 40)
    ds = Dataset(X, y, 3)
    params = PerceptronParams(learning_rate=0.5, epochs=7)
    clf = train_perceptron(ds, params, seed=99)
    W, b = _reference_perceptron(X, y, 3, params, 99)
    np.testing.assert_allclose(clf.weights, W, atol=1e-12)
    np.testing.assert_allclose(clf.bias, b, atol=1e-12)


def test_argmax_tie_goes_to_lowest_class():
    clf = LinearClassifier(np.zeros((3, 2)), np.array([0.0, 1.0, 1.0]))
    assert clf.predict([[0.0, 0.0]])[0] == 1


def test_pool_size_100(banana):
    pool = bagging_generate(banana, pool_size=100, params=PerceptronParams(epochs=3), seed=1)
    assert len(pool) == 100
    assert all(len(b) == banana.n_samples for b in pool.bag_indices)


def test_pool_of_one_equals_direct_training(banana):
    pool = bagging_generate(banana, pool_size=1, seed=5)
    bag = banana.subset(pool.bag_indices[0])
    direct = train_perceptron(bag, seed=pool.bag_seeds[0])
    assert np.array_equal(pool[0].weights, direct.weights)
    assert np.array_equal(pool[0].bias, direct.bias)


def test_bagging_unique_fraction():
    # Monte Carlo: a bootstrap of size n holds about 1 - 1/e of the points
    ds = Dataset(np.zeros((1000, 1)), np.arange(1000) % 2, 2)
    pool = bagging_generate(ds, pool_size=100, params=PerceptronParams(epochs=1), seed=0)
    frac = np.mean([np.unique(b).size / 1000 for b in pool.bag_indices])
    assert abs(frac - (1 - np.exp(-1))) <= 0.03


def test_single_class_bags_warn_and_go_constant():
    # class 1 absent from this partition, so every redraw is single-class
    ds = Dataset(np.arange(30.0)[:, None], [0] * 30, 2)
    with pytest.warns(RuntimeWarning):
        pool = bagging_generate(ds, pool_size=3, seed=0)
    probe = np.linspace(-50, 50, 7)[:, None]
    assert all(m.epochs_run == 0 and np.all(m.predict(probe) == 0) for m in pool)


def test_bagging_is_deterministic(banana):
    a = bagging_generate(banana, 5, seed=9)
    b = bagging_generate(banana, 5, seed=9)
    assert all(np.array_equal(x.weights, y.weights) for x, y in zip(a, b))


def test_oracle_matrix_hand_toy():
    c0 = LinearClassifier(np.array([[1.0, 0.0], [-1.0, 0.0]]), np.zeros(2))
    c1 = LinearClassifier(np.array([[0.0, 1.0], [0.0, -1.0]]), np.array([0.0, 0.5]))
    pool = ClassifierPool((c0, c1))
    dsel = Dataset([[2.0, 1.0], [-1.0, 0.0], [0.5, -3.0]], [0, 1, 1], 2)
    om = build_oracle_matrix(pool, dsel)
    # c0: acts (2,-2),(-1,1),(0.5,-0.5) -> 0,1,0 ; c1: (1,-0.5),(0,0.5),(-3,3.5) -> 0,1,1
    assert om.predictions.tolist() == [[0, 1, 0], [0, 1, 1]]
    assert om.correctness.tolist() == [[True, True, False], [True, True, True]]
    e = np.exp
    np.testing.assert_allclose(om.soft_outputs[1, 0], [e(1) / (e(1) + e(-0.5)), e(-0.5) / (e(1) + e(-0.5))])


def test_oracle_invariants(banana):
    pool = bagging_generate(banana, 10, seed=2)
    om = build_oracle_matrix(pool, banana)
    assert np.array_equal(om.correctness, om.predictions == banana.labels)
    np.testing.assert_allclose(om.soft_outputs.sum(axis=-1), 1.0, atol=1e-9)
    assert np.array_equal(om.predictions, om.soft_outputs.argmax(axis=-1))
    again = build_oracle_matrix(pool, banana)
    assert np.array_equal(om.soft_outputs, again.soft_outputs)
    i = 3
    assert om.correctness[i].mean() == np.mean(pool[i].predict(banana.features) == banana.labels)


def test_constant_classifier_oracle_row():
    dsel = Dataset([[0.0], [1.0], [5.0]], [1, 1, 1], 2)
    pool = ClassifierPool((LinearClassifier.constant(1, 2, 1),))
    assert build_oracle_matrix(pool, dsel).correctness.all()


def test_majority_vote_floor(banana):
    pool = bagging_generate(banana, 15, seed=4)
    om = build_oracle_matrix(pool, banana)
    votes = np.apply_along_axis(lambda c: np.bincount(c, minlength=2).argmax(), 0, om.predictions)
    assert np.mean(votes == banana.labels) >= om.correctness.mean(axis=1).min()


def test_save_load_exact(tmp_path, banana):
    pool = bagging_generate(banana, 4, seed=0)
    back = load_pool(save_pool(pool, tmp_path / "pool.json"))
    for a, b in zip(pool, back):
        assert np.array_equal(a.weights, b.weights) and np.array_equal(a.bias, b.bias)
        assert a.seed == b.seed
    assert back.bag_seeds == pool.bag_seeds


def test_load_rejects_other_schema(tmp_path):
    p = tmp_path / "x.json"
    p.write_text('{"schema": "other/9", "members": []}')
    with pytest.raises(ValueError):
        load_pool(p)
