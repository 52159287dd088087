import numpy as np
import pytest

from mtlsa import distweight
from oracles import random_transport_instance, transport_min_cost_by_vertex_enumeration


def two_blob_features(rng, n1=60, n2=40, c1=(0.0, 0.0), c2=(100.0, 100.0), radius=0.5):
    b1 = np.asarray(c1) + rng.uniform(-radius, radius, size=(n1, 2))
    b2 = np.asarray(c2) + rng.uniform(-radius, radius, size=(n2, 2))
    return np.vstack([b1, b2]), b1, b2


class TestFitGmm:
    def test_single_component_closed_form(self):
        rng = np.random.default_rng(0)
        x = rng.normal(size=(50, 3))
        model = distweight.fit_gmm(x, 1, seed=1)
        assert model.means[0] == pytest.approx(x.mean(axis=0), abs=1e-9)
        assert model.priors.tolist() == [1.0]
        assert np.all(model.responsibilities == 1.0)

    def test_recovers_two_separated_blobs(self):
        rng = np.random.default_rng(1)
        x, b1, b2 = two_blob_features(rng)
        model = distweight.fit_gmm(x, 2, seed=2)
        blob_means = sorted([b1.mean(axis=0), b2.mean(axis=0)], key=lambda m: m[0])
        fitted = sorted(model.means, key=lambda m: m[0])
        for fit, true in zip(fitted, blob_means):
            assert np.linalg.norm(fit - true) < 0.1
        props = sorted(model.priors)
        assert props == pytest.approx([0.4, 0.6], abs=0.02)

    def test_identical_points_variance_floor(self):
        x = np.ones((10, 2)) * 3.5
        model = distweight.fit_gmm(x, 1, seed=0)
        assert model.means[0] == pytest.approx([3.5, 3.5])
        assert model.variances[0] == distweight.VARIANCE_FLOOR

    def test_too_many_clusters_rejected(self):
        with pytest.raises(ValueError):
            distweight.fit_gmm(np.zeros((3, 2)), 4, seed=0)
        with pytest.raises(ValueError):
            distweight.fit_gmm(np.zeros((3, 2)), 0, seed=0)

    def test_deterministic_for_seed(self):
        rng = np.random.default_rng(2)
        x = rng.normal(size=(40, 2))
        m1 = distweight.fit_gmm(x, 3, seed=9)
        m2 = distweight.fit_gmm(x, 3, seed=9)
        assert np.array_equal(m1.means, m2.means)
        assert np.array_equal(m1.responsibilities, m2.responsibilities)

    def test_log_likelihood_nondecreasing(self):
        rng = np.random.default_rng(3)
        for seed in range(5):
            x = rng.normal(size=(60, 2)) + rng.integers(0, 4, size=(60, 1))
            model = distweight.fit_gmm(x, 3, seed=seed)
            trace = np.asarray(model.log_likelihood_trace)
            assert np.all(np.diff(trace) >= -1e-10)

    def test_responsibility_rows_on_simplex(self):
        rng = np.random.default_rng(4)
        x = rng.normal(size=(30, 2))
        model = distweight.fit_gmm(x, 4, seed=5)
        assert model.responsibilities.shape == (30, 4)
        assert model.responsibilities.sum(axis=1) == pytest.approx(np.ones(30), abs=1e-9)
        assert model.priors.sum() == pytest.approx(1.0, abs=1e-9)


class TestMmdClusterDistance:
    def test_unit_displacement(self):
        assert distweight.mmd_cluster_distance([1.0, 0.0], [0.0, 0.0]) == 1.0

    def test_identical_means(self):
        assert distweight.mmd_cluster_distance([2.0, 3.0], [2.0, 3.0]) == 0.0

    def test_three_four_five(self):
        assert distweight.mmd_cluster_distance([3.0, 4.0], [0.0, 0.0]) == 25.0

    def test_dimension_mismatch(self):
        with pytest.raises(ValueError):
            distweight.mmd_cluster_distance([1.0, 2.0], [1.0, 2.0, 3.0])


class TestSolveEmd:
    def test_perfect_matching(self):
        plan = distweight.solve_emd([0.5, 0.5], [0.5, 0.5], [[0.0, 1.0], [1.0, 0.0]])
        assert plan.total_cost == pytest.approx(0.0, abs=1e-12)
        assert plan.flows == pytest.approx(np.diag([0.5, 0.5]), abs=1e-9)

    def test_single_source_forced_flow(self):
        plan = distweight.solve_emd([1.0], [0.3, 0.7], [[2.0, 4.0]])
        assert plan.flows == pytest.approx(np.array([[0.3, 0.7]]), abs=1e-9)
        assert plan.total_cost == pytest.approx(3.4, abs=1e-12)

    def test_two_by_two_instance(self):
        # Enumerating the polytope vertices (t = flow on cell 0,0 in [0.1, 0.5],
        # cost 2.7 - 3t) gives the optimum 1.2 at h = [[0.5, 0.1], [0.0, 0.4]].
        supplies, demands = [0.6, 0.4], [0.5, 0.5]
        costs = [[1.0, 3.0], [2.0, 1.0]]
        expected = transport_min_cost_by_vertex_enumeration(supplies, demands, costs)
        assert expected == pytest.approx(1.2, abs=1e-12)
        plan = distweight.solve_emd(supplies, demands, costs)
        assert plan.total_cost == pytest.approx(expected, abs=1e-9)
        assert plan.flows == pytest.approx(np.array([[0.5, 0.1], [0.0, 0.4]]), abs=1e-9)

    def test_matches_vertex_enumeration_on_random_instances(self):
        rng = np.random.default_rng(6)
        for _ in range(60):
            supplies, demands, costs = random_transport_instance(rng)
            plan = distweight.solve_emd(supplies, demands, costs)
            oracle = transport_min_cost_by_vertex_enumeration(supplies, demands, costs)
            assert plan.total_cost == pytest.approx(oracle, abs=1e-9)

    def test_plan_invariants(self):
        rng = np.random.default_rng(7)
        for _ in range(30):
            supplies, demands, costs = random_transport_instance(rng)
            plan = distweight.solve_emd(supplies, demands, costs)
            assert np.all(plan.flows >= 0.0)
            assert np.all(plan.flows.sum(axis=1) <= supplies + 1e-9)
            assert np.all(plan.flows.sum(axis=0) <= demands + 1e-9)
            assert plan.flows.sum() == pytest.approx(min(supplies.sum(), demands.sum()), abs=1e-9)

    def test_single_source_matches_closed_form(self):
        rng = np.random.default_rng(11)
        for _ in range(50):
            k = int(rng.integers(1, 6))
            priors = rng.uniform(0.05, 1.0, size=k)
            priors /= priors.sum()
            costs = rng.uniform(0.0, 20.0, size=(1, k))
            plan = distweight.solve_emd([1.0], priors, costs)
            assert plan.total_cost == pytest.approx(float(priors @ costs[0]), abs=1e-9)

    def test_unbalanced_rejected(self):
        with pytest.raises(ValueError):
            distweight.solve_emd([1.0], [0.3, 0.6], [[1.0, 2.0]])

    def test_negative_inputs_rejected(self):
        with pytest.raises(ValueError):
            distweight.solve_emd([-1.0], [-1.0], [[1.0]])


class TestClusterToDomainDistance:
    def test_forced_flow_case(self):
        model_b = _model(means=[[0.0, 0.0]], priors=[1.0])
        model_a = _model(means=[[np.sqrt(2.0), 0.0], [2.0, 0.0]], priors=[0.3, 0.7])
        d_e = distweight.cluster_to_domain_distance(model_b, model_a)
        assert d_e == pytest.approx([0.3 * 2.0 + 0.7 * 4.0], abs=1e-9)

    def test_single_reference_cluster_degeneracy(self):
        model_b = _model(means=[[1.0, 1.0], [3.0, 0.0]], priors=[0.5, 0.5])
        model_a = _model(means=[[0.0, 0.0]], priors=[1.0])
        d_e = distweight.cluster_to_domain_distance(model_b, model_a)
        assert d_e == pytest.approx([2.0, 9.0], abs=1e-9)

    def test_collapse_to_weighted_average(self):
        rng = np.random.default_rng(8)
        for _ in range(20):
            kb, ka = int(rng.integers(1, 4)), int(rng.integers(1, 4))
            model_b = _model(rng.normal(size=(kb, 3)), _rand_simplex(rng, kb))
            model_a = _model(rng.normal(size=(ka, 3)), _rand_simplex(rng, ka))
            d_e = distweight.cluster_to_domain_distance(model_b, model_a)
            for k in range(kb):
                closed_form = sum(
                    model_a.priors[j]
                    * distweight.mmd_cluster_distance(model_b.means[k], model_a.means[j])
                    for j in range(ka)
                )
                assert d_e[k] == pytest.approx(closed_form, abs=1e-9)

    def test_dimension_mismatch(self):
        model_b = _model(means=[[0.0, 0.0]], priors=[1.0])
        model_a = _model(means=[[0.0, 0.0, 0.0]], priors=[1.0])
        with pytest.raises(ValueError):
            distweight.cluster_to_domain_distance(model_b, model_a)


class TestDistributionWeights:
    def test_zero_distance_gives_unit_weight(self):
        model = _model(means=[[0.0]], priors=[1.0], resp=np.ones((3, 1)))
        h_hat, w_g = distweight.distribution_weights(model, [0.0], lam=0.1)
        assert np.all(h_hat == 0.0)
        assert np.all(w_g == 1.0)

    def test_hand_value(self):
        model = _model(means=[[0.0]], priors=[1.0], resp=np.ones((1, 1)))
        _, w_g = distweight.distribution_weights(model, [10.0], lam=0.1)
        assert w_g[0] == pytest.approx(np.exp(-1.0), abs=1e-12)

    def test_one_hot_responsibility(self):
        resp = np.array([[1.0, 0.0], [0.0, 1.0]])
        model = _model(means=[[0.0], [1.0]], priors=[0.5, 0.5], resp=resp)
        h_hat, _ = distweight.distribution_weights(model, [2.5, 7.0], lam=0.1)
        assert h_hat.tolist() == [2.5, 7.0]

    def test_monotone_and_bounded(self):
        rng = np.random.default_rng(9)
        resp = _rand_simplex_rows(rng, 20, 3)
        model = _model(means=np.zeros((3, 1)), priors=[1 / 3] * 3, resp=resp)
        d_e = np.array([0.0, 5.0, 20.0])
        h_hat, w_g = distweight.distribution_weights(model, d_e, lam=0.1)
        assert np.all(w_g > 0.0)
        assert np.all(w_g <= 1.0)
        order = np.argsort(h_hat)
        assert np.all(np.diff(w_g[order]) <= 1e-15)

    def test_nonpositive_lambda_rejected(self):
        model = _model(means=[[0.0]], priors=[1.0], resp=np.ones((1, 1)))
        with pytest.raises(ValueError):
            distweight.distribution_weights(model, [1.0], lam=0.0)


class TestTranslationInvariance:
    def test_full_pipeline_shift_invariant(self):
        rng = np.random.default_rng(10)
        feats_b = rng.normal(size=(50, 2)) + [2.0, 0.0]
        feats_a = rng.normal(size=(60, 2))
        offset = np.array([13.5, -7.25])

        def pipeline(fb, fa):
            model_b = distweight.fit_gmm(fb, 3, seed=21)
            model_a = distweight.fit_gmm(fa, 2, seed=22)
            d_e = distweight.cluster_to_domain_distance(model_b, model_a)
            h_hat, w_g = distweight.distribution_weights(model_b, d_e, lam=0.1)
            d_m = np.array(
                [
                    [distweight.mmd_cluster_distance(mb, ma) for ma in model_a.means]
                    for mb in model_b.means
                ]
            )
            return d_m, d_e, h_hat, w_g

        base = pipeline(feats_b, feats_a)
        shifted = pipeline(feats_b + offset, feats_a + offset)
        for got, want in zip(shifted, base):
            assert got == pytest.approx(want, abs=1e-9)


def _model(means, priors, resp=None):
    means = np.asarray(means, dtype=np.float64)
    priors = np.asarray(priors, dtype=np.float64)
    if resp is None:
        resp = np.tile(priors, (1, 1))
    return distweight.ClusterModel(
        means=means,
        priors=priors,
        variances=np.ones(len(means)),
        responsibilities=np.asarray(resp, dtype=np.float64),
        log_likelihood_trace=[],
    )


def _rand_simplex(rng, k):
    v = rng.uniform(0.1, 1.0, size=k)
    return v / v.sum()


def _rand_simplex_rows(rng, n, k):
    v = rng.uniform(0.1, 1.0, size=(n, k))
    return v / v.sum(axis=1, keepdims=True)
