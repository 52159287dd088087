import math

import numpy as np
import pytest

from mtlsa import confweight


THREE_POINTS = np.array([[0.0, 0.0], [0.1, 0.0], [10.0, 0.0]])


def oracle_distance_matrix(features):
    n = len(features)
    d = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            acc = 0.0
            for a, b in zip(features[i], features[j]):
                acc += (a - b) ** 2
            d[i, j] = acc
    return d


def oracle_cutoff(distances, kappa):
    flat = sorted(float(v) for row in distances for v in row)
    return flat[math.ceil(kappa * len(flat)) - 1]


def oracle_density(distances, cutoff):
    n = len(distances)
    return [sum(1 for j in range(n) if distances[i][j] < cutoff) for i in range(n)]


class TestConfidenceScore:
    def test_max_forced(self):
        assert confweight.confidence_score([0.1, 0.7, 0.2]) == pytest.approx(0.7)

    def test_uniform(self):
        assert confweight.confidence_score([0.25] * 4) == pytest.approx(0.25)

    def test_one_hot(self):
        assert confweight.confidence_score([0.0, 1.0, 0.0]) == 1.0


class TestDistanceMatrix:
    def test_hand_example(self):
        d = confweight.distance_matrix([[0.0, 0.0], [3.0, 4.0]])
        assert d.tolist() == [[0.0, 25.0], [25.0, 0.0]]

    def test_single_point(self):
        assert confweight.distance_matrix([[1.0, 2.0]]).tolist() == [[0.0]]

    def test_duplicated_points(self):
        d = confweight.distance_matrix([[1.0, 2.0], [1.0, 2.0], [1.0, 2.0]])
        assert np.all(d == 0.0)

    def test_ragged_rejected(self):
        with pytest.raises(ValueError):
            confweight.distance_matrix(np.array([[1.0], [1.0, 2.0]], dtype=object))

    def test_matches_scalar_loop_oracle(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            pts = rng.normal(size=(10, 3))
            d = confweight.distance_matrix(pts)
            assert np.allclose(d, oracle_distance_matrix(pts), rtol=1e-12, atol=1e-12)
            assert np.array_equal(d, d.T)
            assert np.all(np.diag(d) == 0.0)


class TestDensityCutoff:
    def test_hand_worked_three_points(self):
        d = confweight.distance_matrix(THREE_POINTS)
        # ascending entries [0,0,0,0.01,0.01,98.01,98.01,100,100]; ceil(0.6*9)=6
        assert confweight.density_cutoff(d, 0.6) == pytest.approx(98.01, abs=1e-9)

    def test_all_zero(self):
        assert confweight.density_cutoff(np.zeros((4, 4)), 0.6) == 0.0

    def test_one_by_one(self):
        assert confweight.density_cutoff([[0.0]], 0.3) == 0.0
        assert confweight.density_cutoff([[0.0]], 0.9) == 0.0

    def test_kappa_out_of_range(self):
        with pytest.raises(ValueError):
            confweight.density_cutoff(np.zeros((2, 2)), 0.0)
        with pytest.raises(ValueError):
            confweight.density_cutoff(np.zeros((2, 2)), 1.0)

    def test_matches_sort_oracle(self):
        rng = np.random.default_rng(1)
        for _ in range(50):
            n = rng.integers(1, 20)
            pts = rng.normal(size=(n, 2))
            d = confweight.distance_matrix(pts)
            kappa = float(rng.uniform(0.05, 0.95))
            assert confweight.density_cutoff(d, kappa) == oracle_cutoff(d, kappa)


class TestLocalDensity:
    def test_hand_worked_three_points(self):
        d = confweight.distance_matrix(THREE_POINTS)
        cutoff = confweight.density_cutoff(d, 0.6)
        # row 2's entry equal to the cutoff is NOT strictly below it
        assert confweight.local_density(d, cutoff).tolist() == [2, 2, 1]

    def test_zero_cutoff(self):
        d = confweight.distance_matrix(np.random.default_rng(2).normal(size=(5, 2)))
        assert confweight.local_density(d, 0.0).tolist() == [0] * 5

    def test_infinite_cutoff(self):
        d = confweight.distance_matrix(np.random.default_rng(3).normal(size=(5, 2)))
        assert confweight.local_density(d, np.inf).tolist() == [5] * 5

    def test_matches_double_loop_oracle(self):
        rng = np.random.default_rng(4)
        for _ in range(200):
            n = int(rng.integers(1, 15))
            d = confweight.distance_matrix(rng.normal(size=(n, 2)))
            cutoff = float(rng.uniform(0.0, 8.0))
            assert confweight.local_density(d, cutoff).tolist() == oracle_density(d, cutoff)


class TestConfidenceWeights:
    def test_hand_worked_group(self):
        softs = [[0.9, 0.1], [0.8, 0.2], [0.7, 0.3]]
        res = confweight.confidence_weights(softs, THREE_POINTS, kappa=0.6)
        assert res.w_d.tolist() == [1.0, 1.0, 0.5]
        assert res.w_c == pytest.approx([0.9, 0.8, 0.7])
        assert res.w_s == pytest.approx([0.9, 0.8, 0.35])

    def test_singleton_group_gets_full_density_weight(self):
        softs = [[0.9, 0.1], [0.2, 0.8]]
        res = confweight.confidence_weights(softs, [[0.0, 0.0], [5.0, 5.0]])
        assert res.w_d.tolist() == [1.0, 1.0]

    def test_identical_group_members(self):
        softs = [[0.9, 0.1], [0.9, 0.1]]
        res = confweight.confidence_weights(softs, [[1.0, 1.0], [1.0, 1.0]])
        assert res.w_d.tolist() == [1.0, 1.0]

    def test_elementwise_product(self):
        softs = [[0.5, 0.5], [1.0 - 1e-12, 1e-12], [0.8, 0.2]]
        res = confweight.confidence_weights(softs, THREE_POINTS)
        assert np.allclose(res.w_s, res.w_c * res.w_d)

    def test_misaligned_inputs_rejected(self):
        with pytest.raises(ValueError):
            confweight.confidence_weights([[0.5, 0.5]], [[0.0, 0.0], [1.0, 1.0]])

    def test_empty_rejected(self):
        with pytest.raises(ValueError):
            confweight.confidence_weights([], [])

    def test_group_max_density_weight_is_one(self):
        rng = np.random.default_rng(5)
        softs = rng.dirichlet(np.ones(3), size=30)
        feats = rng.normal(size=(30, 4))
        res = confweight.confidence_weights(softs, feats)
        pseudo = np.argmax(softs, axis=1)
        for cls in np.unique(pseudo):
            assert res.w_d[pseudo == cls].max() == pytest.approx(1.0)
        assert np.all(res.w_s >= 0.0)
        assert np.all(res.w_s <= 1.0)
