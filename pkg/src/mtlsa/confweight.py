"""Pseudo-label confidence weighting.

Per sample: w_c is the top decision value of its soft label vector, w_d the
local density of its feature vector within its pseudo-class group (normalized
by the group maximum), and w_s = w_c * w_d. Distances are squared Euclidean;
the density cutoff is the ceil(kappa * n^2)-th smallest entry of the full
pairwise matrix of a group, counting the zero diagonal.
"""

import math
from typing import NamedTuple

import numpy as np

from .labelops import check_label_vector


class ConfidenceWeights(NamedTuple):
    w_c: np.ndarray
    w_d: np.ndarray
    w_s: np.ndarray


def confidence_score(soft):
    """Highest decision value of a soft label vector, in (0, 1]."""
    return float(check_label_vector(soft).max())


def distance_matrix(features):
    """Symmetric matrix of squared Euclidean distances with a zero diagonal."""
    f = np.asarray(features, dtype=np.float64)
    if f.ndim == 1:
        f = f[:, None]
    if f.ndim != 2:
        raise ValueError(f"features must be a 2-D array of row vectors, got shape {f.shape}")
    diff = f[:, None, :] - f[None, :, :]
    return (diff * diff).sum(axis=2)


def density_cutoff(distances, kappa):
    """Entry at 1-based position ceil(kappa * n^2) in the ascending sort of all entries."""
    if not 0.0 < kappa < 1.0:
        raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    flat = np.sort(d, axis=None)
    position = math.ceil(kappa * flat.size)
    return float(flat[position - 1])


def local_density(distances, cutoff):
    """Per-row count of entries strictly below the cutoff (self column included)."""
    d = np.asarray(distances, dtype=np.float64)
    if d.ndim != 2 or d.shape[0] != d.shape[1]:
        raise ValueError(f"distance matrix must be square, got shape {d.shape}")
    return (d < cutoff).sum(axis=1).astype(np.int64)


def confidence_weights(softs, features, kappa=0.6):
    """Compute (w_c, w_d, w_s) for aligned soft label vectors and feature vectors.

    Samples are grouped by pseudo class (argmax of the unsharpened soft
    vector, ties to the lowest index); densities are computed within each
    group and normalized by the group maximum. A group whose maximum density
    is zero (singleton or all-identical members, cutoff 0) gets w_d = 1 for
    every member: no density evidence means no penalty.
    """
    soft_mat = np.asarray([check_label_vector(s) for s in softs], dtype=np.float64)
    feat_mat = np.asarray(features, dtype=np.float64)
    if feat_mat.ndim == 1:
        feat_mat = feat_mat[:, None]
    if len(soft_mat) != len(feat_mat):
        raise ValueError(
            f"softs and features are misaligned: {len(soft_mat)} vs {len(feat_mat)}"
        )
    if len(soft_mat) == 0:
        raise ValueError("confidence_weights requires at least one sample")

    w_c = soft_mat.max(axis=1)
    w_d = np.zeros(len(soft_mat))
    pseudo = np.argmax(soft_mat, axis=1)
    for cls in np.unique(pseudo):
        idx = np.flatnonzero(pseudo == cls)
        dist = distance_matrix(feat_mat[idx])
        rho = local_density(dist, density_cutoff(dist, kappa))
        max_rho = rho.max()
        w_d[idx] = 1.0 if max_rho == 0 else rho / max_rho
    w_s = w_c * w_d
    return ConfidenceWeights(w_c=w_c, w_d=w_d, w_s=w_s)
