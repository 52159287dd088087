"""Distribution-distance weighting.

Both domains are summarized by spherical Gaussian mixtures fitted with EM
(k-means++ style seeding, seeded and deterministic). Cluster-to-cluster
distances are squared Euclidean between means; the distance from one cluster
to a whole domain is the optimal-transport cost from a unit mass at that
cluster to the prior-weighted clusters of the other domain, solved as an
exact linear program. Per-sample distances mix the cluster distances with the
GMM responsibilities and map to weights via exp(-lambda * distance).
"""

from dataclasses import dataclass

import numpy as np
from scipy.optimize import linprog

VARIANCE_FLOOR = 1e-6
EM_MAX_ITER = 100
EM_REL_TOL = 1e-8
BALANCE_TOL = 1e-6


@dataclass
class ClusterModel:
    """Spherical-GMM summary of one domain."""

    means: np.ndarray  # (K, d)
    priors: np.ndarray  # (K,)
    variances: np.ndarray  # (K,)
    responsibilities: np.ndarray  # (n, K), rows on the simplex
    log_likelihood_trace: list

    @property
    def n_clusters(self):
        return self.means.shape[0]


@dataclass
class TransportPlan:
    flows: np.ndarray  # (n_supplies, n_demands), nonnegative
    total_cost: float  # flow-weighted mean cost, sum(h * d) / sum(h)


def _sq_dists_to(points, centers):
    diff = points[:, None, :] - centers[None, :, :]
    return (diff * diff).sum(axis=2)


def _kmeanspp_centers(points, k, rng):
    n = points.shape[0]
    centers = [points[int(rng.integers(n))]]
    for _ in range(k - 1):
        d2 = _sq_dists_to(points, np.asarray(centers)).min(axis=1)
        total = d2.sum()
        probs = np.full(n, 1.0 / n) if total <= 0 else d2 / total
        centers.append(points[int(rng.choice(n, p=probs))])
    return np.asarray(centers)


def fit_gmm(features, n_clusters, seed):
    """EM-fit a spherical GMM; deterministic for a fixed seed."""
    x = np.asarray(features, dtype=np.float64)
    if x.ndim == 1:
        x = x[:, None]
    n, d = x.shape
    if n_clusters < 1:
        raise ValueError(f"cluster count must be >= 1, got {n_clusters}")
    if n_clusters > n:
        raise ValueError(f"cluster count {n_clusters} exceeds sample count {n}")

    rng = np.random.default_rng(seed)
    means = _kmeanspp_centers(x, n_clusters, rng)
    d2 = _sq_dists_to(x, means)
    assign = d2.argmin(axis=1)
    priors = np.maximum(np.bincount(assign, minlength=n_clusters) / n, 1e-12)
    priors = priors / priors.sum()
    variances = np.empty(n_clusters)
    for k in range(n_clusters):
        members = d2[assign == k, k]
        variances[k] = max(members.mean() / d if members.size else VARIANCE_FLOOR, VARIANCE_FLOOR)

    trace = []
    prev_ll = -np.inf
    for _ in range(EM_MAX_ITER):
        d2 = _sq_dists_to(x, means)
        log_prob = -0.5 * (d * np.log(2.0 * np.pi * variances)[None, :] + d2 / variances[None, :])
        log_weighted = log_prob + np.log(priors)[None, :]
        row_max = log_weighted.max(axis=1, keepdims=True)
        log_norm = row_max + np.log(np.exp(log_weighted - row_max).sum(axis=1, keepdims=True))
        resp = np.exp(log_weighted - log_norm)
        ll = float(log_norm.sum())
        trace.append(ll)

        weight = resp.sum(axis=0)
        safe_weight = np.maximum(weight, 1e-300)
        priors = weight / n
        means = (resp.T @ x) / safe_weight[:, None]
        d2_new = _sq_dists_to(x, means)
        variances = np.maximum((resp * d2_new).sum(axis=0) / (d * safe_weight), VARIANCE_FLOOR)

        if np.isfinite(prev_ll) and abs(ll - prev_ll) <= EM_REL_TOL * max(1.0, abs(prev_ll)):
            break
        prev_ll = ll

    # final responsibilities for the returned parameters
    d2 = _sq_dists_to(x, means)
    log_prob = -0.5 * (d * np.log(2.0 * np.pi * variances)[None, :] + d2 / variances[None, :])
    log_weighted = log_prob + np.log(np.maximum(priors, 1e-300))[None, :]
    row_max = log_weighted.max(axis=1, keepdims=True)
    log_norm = row_max + np.log(np.exp(log_weighted - row_max).sum(axis=1, keepdims=True))
    resp = np.exp(log_weighted - row_max)
    resp = resp / resp.sum(axis=1, keepdims=True)
    trace.append(float(log_norm.sum()))

    return ClusterModel(
        means=means,
        priors=priors / priors.sum(),
        variances=variances,
        responsibilities=resp,
        log_likelihood_trace=trace,
    )


def mmd_cluster_distance(mu_b_k, mu_a_j):
    """Squared Euclidean distance between two cluster means."""
    u = np.asarray(mu_b_k, dtype=np.float64)
    v = np.asarray(mu_a_j, dtype=np.float64)
    if u.shape != v.shape:
        raise ValueError(f"mean dimension mismatch: {u.shape} vs {v.shape}")
    diff = u - v
    return float(diff @ diff)


def solve_emd(supplies, demands, costs):
    """Exact balanced-transportation solve; minimizes sum(h * cost).

    Supplies and demands must be nonnegative with totals equal within 1e-6
    (normalize beforehand). The LP is solved exactly with the HiGHS simplex
    backend; total_cost is the flow-weighted mean sum(h*d)/sum(h).
    """
    s = np.asarray(supplies, dtype=np.float64)
    t = np.asarray(demands, dtype=np.float64)
    c = np.atleast_2d(np.asarray(costs, dtype=np.float64))
    if s.ndim != 1 or t.ndim != 1:
        raise ValueError("supplies and demands must be 1-D")
    if np.any(s < 0) or np.any(t < 0) or np.any(c < 0):
        raise ValueError("supplies, demands, and costs must be nonnegative")
    if c.shape != (s.size, t.size):
        raise ValueError(f"cost matrix shape {c.shape} does not match ({s.size}, {t.size})")
    if abs(s.sum() - t.sum()) > BALANCE_TOL:
        raise ValueError(f"unbalanced totals: supplies {s.sum()!r} vs demands {t.sum()!r}")
    if s.sum() <= 0:
        raise ValueError("total mass must be positive")

    m, n = c.shape
    a_eq = np.zeros((m + n, m * n))
    for k in range(m):
        a_eq[k, k * n : (k + 1) * n] = 1.0
    for j in range(n):
        a_eq[m + j, j::n] = 1.0
    res = linprog(
        c.ravel(),
        A_eq=a_eq,
        b_eq=np.concatenate([s, t]),
        bounds=(0, None),
        method="highs",
    )
    if not res.success:
        raise RuntimeError(f"transportation solve failed: {res.message}")
    flows = np.maximum(res.x.reshape(m, n), 0.0)
    total_flow = flows.sum()
    return TransportPlan(flows=flows, total_cost=float((flows * c).sum() / total_flow))


def cluster_to_domain_distance(model_b, model_a):
    """Transport cost from each cluster of domain B to the whole of domain A."""
    if model_b.means.shape[1] != model_a.means.shape[1]:
        raise ValueError(
            f"feature dimension mismatch: {model_b.means.shape[1]} vs {model_a.means.shape[1]}"
        )
    out = np.empty(model_b.n_clusters)
    for k in range(model_b.n_clusters):
        row = np.array(
            [mmd_cluster_distance(model_b.means[k], mu) for mu in model_a.means]
        )
        out[k] = solve_emd([1.0], model_a.priors, row[None, :]).total_cost
    return out


def mmd_domain_mean_distances(model_b, reference_features):
    """Squared distance from each B-cluster mean to the reference domain's global mean.

    This is the plain-MMD replacement for the transport distances, used by
    the only-w^g(MMD) ablation.
    """
    ref = np.asarray(reference_features, dtype=np.float64)
    if ref.ndim == 1:
        ref = ref[:, None]
    center = ref.mean(axis=0)
    return np.array([mmd_cluster_distance(mu, center) for mu in model_b.means])


def distribution_weights(model_b, cluster_distances, lam=0.1):
    """Per-sample expected cluster distance and weight exp(-lambda * distance)."""
    if lam <= 0:
        raise ValueError(f"lambda must be positive, got {lam}")
    d_e = np.asarray(cluster_distances, dtype=np.float64)
    if d_e.shape != (model_b.n_clusters,):
        raise ValueError(
            f"expected {model_b.n_clusters} cluster distances, got shape {d_e.shape}"
        )
    h_hat = model_b.responsibilities @ d_e
    return h_hat, np.exp(-lam * h_hat)
