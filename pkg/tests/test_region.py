import itertools

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from dsknn.data import Dataset
from dsknn.pool import ClassifierPool, LinearClassifier, build_oracle_matrix
from dsknn.region import (
    KNNClassifier,
    kmeans_fit,
    knn_region,
    knn_search,
    nearest_cluster,
    output_profile,
    profile_knn,
    profile_similarity,
)


def _brute_knn(ref, q, K):
    d = [float(np.sqrt(((r - q) ** 2).sum())) for r in ref]
    order = sorted(range(len(ref)), key=lambda i: (d[i], i))[:K]
    return order, [d[i] for i in order]


def _const_pool(labels, M, d):
    return ClassifierPool(tuple(LinearClassifier.constant(c, M, d) for c in labels))


def test_query_on_dsel_point_is_first():
    X = np.random.default_rng(0).normal(size=(20, 3))
    idx, dist = knn_search(X, X[7], 3)
    assert idx[0, 0] == 7 and dist[0, 0] == 0.0


def test_seven_neighbour_majority():
    # 7 neighbours around the query: 5 of class 1 (index 1 = "class 2"), 2 of class 0
    X = np.array([[0.1, 0], [0, 0.2], [-0.3, 0], [0, -0.4], [0.5, 0.5], [0.6, 0], [0, 0.7], [9, 9]])
    y = np.array([1, 0, 1, 1, 0, 1, 1, 0])
    ds = Dataset(X, y, 2)
    om = build_oracle_matrix(_const_pool([0], 2, 2), ds)
    region = knn_region(np.zeros(2), ds, om, K=7)
    assert np.bincount(region.labels).argmax() == 1
    assert 7 not in region.indices


def test_one_dimensional_brute_force_sort():
    x = np.array([3.0, -1.5, 0.5, -0.5, 2.0, -2.5, 1.0, 4.0, -3.0, 0.25])
    idx, dist = knn_search(x[:, None], [[0.0]], 10)
    expected = sorted(range(10), key=lambda i: (abs(x[i]), i))
    assert idx[0].tolist() == expected
    np.testing.assert_array_equal(dist[0], np.abs(x[expected]))


def test_distance_ties_go_to_lower_index():
    X = np.array([[1.0, 0], [0, 1.0], [-1.0, 0], [0, -1.0]])
    idx, _ = knn_search(X, [[0.0, 0.0]], 4)
    assert idx[0].tolist() == [0, 1, 2, 3]


def test_k_too_large():
    with pytest.raises(ValueError):
        knn_search(np.zeros((3, 1)), [[0.0]], 4)


@settings(max_examples=50, deadline=None)
@given(st.integers(1, 30), st.integers(1, 4), st.integers(0, 10**6), st.booleans())
def test_knn_matches_brute_force(n, d, seed, lattice):
    rng = np.random.default_rng(seed)
    # a coarse lattice forces many exact distance ties
    X = rng.integers(-2, 3, size=(n, d)).astype(float) if lattice else rng.normal(size=(n, d))
    q = rng.integers(-2, 3, size=(5, d)).astype(float)
    K = int(rng.integers(1, n + 1))
    idx, dist = knn_search(X, q, K)
    for j in range(5):
        bi, bd = _brute_knn(X, q[j], K)
        assert idx[j].tolist() == bi
        np.testing.assert_allclose(dist[j], bd, rtol=0, atol=1e-12)
        assert np.all(np.diff(dist[j]) >= 0)


def test_prefix_monotonicity():
    rng = np.random.default_rng(3)
    X = rng.normal(size=(40, 2))
    ds = Dataset(X, np.arange(40) % 2, 2)
    om = build_oracle_matrix(_const_pool([0, 1], 2, 2), ds)
    for q in rng.normal(size=(10, 2)):
        r7 = knn_region(q, ds, om, 7)
        r5 = knn_region(q, ds, om, 5)
        assert r5.indices.tolist() == r7.indices[:5].tolist()
        assert r7.prefix(5).indices.tolist() == r5.indices.tolist()


def test_exclusion_skips_self():
    X = np.arange(6.0)[:, None]
    idx, _ = knn_search(X, X, 2, exclude=np.arange(6))
    assert all(i not in row for i, row in enumerate(idx))


# --- output profiles -----------------------------------------------------------

def test_constant_pool_profile_zeros():
    pool = _const_pool([0, 0, 0], 3, 2)
    assert output_profile([1.0, -2.0], pool).tolist() == [0, 0, 0]


def test_hand_profile():
    c0 = LinearClassifier(np.array([[1.0, 0.0], [0.0, 1.0]]), np.zeros(2))
    c1 = LinearClassifier(np.array([[0.0, 0.0], [1.0, 1.0]]), np.array([0.5, 0.0]))
    pool = ClassifierPool((c0, c1))
    # point (2, 1): c0 acts (2, 1) -> 0 ; c1 acts (0.5, 3) -> 1
    assert output_profile([2.0, 1.0], pool).tolist() == [0, 1]


def test_profile_matches_oracle_column():
    rng = np.random.default_rng(1)
    pool = ClassifierPool(tuple(LinearClassifier(rng.normal(size=(3, 2)), rng.normal(size=3))
                                for _ in range(6)))
    ds = Dataset(rng.normal(size=(12, 2)), np.arange(12) % 3, 3)
    om = build_oracle_matrix(pool, ds)
    for k in range(12):
        assert np.array_equal(output_profile(ds.features[k], pool), om.predictions[:, k])


def test_profile_similarity():
    a = np.arange(100) % 3
    assert profile_similarity(a, a) == 1.0
    assert profile_similarity(a, (a + 1) % 3) == 0.0
    b = a.copy()
    b[:27] = (b[:27] + 1) % 3
    assert profile_similarity(a, b) == 0.73
    with pytest.raises(ValueError):
        profile_similarity([0, 1], [0])


@settings(max_examples=40, deadline=None)
@given(st.integers(1, 6), st.integers(2, 12), st.integers(2, 4), st.integers(0, 10**6))
def test_profile_knn_equals_one_hot_euclidean(P, n, M, seed):
    rng = np.random.default_rng(seed)
    profiles = rng.integers(0, M, size=(P, n))
    q = rng.integers(0, M, size=P)
    K = int(rng.integers(1, n + 1))
    onehot = lambda v: np.eye(M)[v].ravel()
    ref = np.array([onehot(profiles[:, k]) for k in range(n)])
    bi, bd = _brute_knn(ref, onehot(q), K)
    idx, dist = profile_knn(q, profiles, K)
    assert idx.tolist() == bi
    np.testing.assert_allclose(dist, bd, atol=1e-12)


# --- K-NN classifier ---------------------------------------------------------------

def test_knn_vote_ties_to_lowest_class():
    ds = Dataset([[-1.0], [1.0], [5.0]], [1, 0, 0], 2)
    assert KNNClassifier(2).fit(ds).predict([[0.0]])[0] == 0


# --- k-means -----------------------------------------------------------------------

def test_k_equals_n_zero_inertia():
    X = np.random.default_rng(0).normal(size=(9, 2))
    m = kmeans_fit(X, k=9, seed=1)
    assert m.inertia == 0.0
    assert sorted(len(g) for g in m.members) == [1] * 9


def _best_two_partition(X):
    best = (np.inf, None)
    n = len(X)
    for mask in itertools.product([0, 1], repeat=n - 1):
        lab = np.array((0,) + mask)
        if lab.min() == lab.max():
            continue
        cost = sum(((X[lab == j] - X[lab == j].mean(axis=0)) ** 2).sum() for j in (0, 1))
        best = min(best, (cost, tuple(lab)), key=lambda t: t[0])
    return best


def test_two_blobs_match_exhaustive_partition():
    rng = np.random.default_rng(4)
    X = np.vstack([rng.normal(0, 0.3, (6, 2)), rng.normal(5, 0.3, (6, 2))])
    cost, lab = _best_two_partition(X)
    m = kmeans_fit(X, k=2, seed=0)
    same = np.array_equal(m.assignments, lab) or np.array_equal(m.assignments, 1 - np.array(lab))
    assert same
    assert m.inertia == pytest.approx(cost, rel=1e-12)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 40), st.integers(1, 5), st.integers(0, 10**6))
def test_kmeans_invariants(n, k, seed):
    k = min(k, n)
    X = np.random.default_rng(seed).normal(size=(n, 2))
    m = kmeans_fit(X, k=k, seed=seed)
    assert np.all(np.diff(m.inertia_history) <= 1e-9 * max(1.0, m.inertia_history[0]))
    assert sorted(np.concatenate(m.members).tolist()) == list(range(n))
    assert np.all(np.isfinite(m.centroids))
    again = kmeans_fit(X, k=k, seed=seed)
    assert np.array_equal(m.centroids, again.centroids)


def test_nearest_cluster_of_centroid():
    X = np.random.default_rng(2).normal(size=(30, 2))
    m = kmeans_fit(X, k=4, seed=0)
    for j in range(4):
        assert nearest_cluster(m, m.centroids[j]) == j
