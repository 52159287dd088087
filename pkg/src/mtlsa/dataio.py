"""Synthetic disjoint-dataset generation, CSV ingestion, deterministic splits.

Both datasets are drawn from one latent standard-normal space. Each task
labels a sample by bucketing its projection onto a task-specific direction at
equal-probability Gaussian quantiles; the two directions differ by a fixed
angle so the tasks are correlated but not identical. Dataset A exposes only
task-A labels and keeps the latent coordinates as features; dataset B exposes
only task-B labels and its features pass through a rotation/scale/offset
transform. True labels for both tasks on both datasets are derived from the
latent points and retained for oracle evaluation only.
"""

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.stats import norm


class DataFormatError(ValueError):
    """Malformed dataset file (message carries the offending line number)."""


@dataclass
class ShiftSpec:
    """Transform applied to dataset B's marginal, plus exposed-label noise."""

    mean_offset: tuple = (0.0, 0.0)
    scale: float = 1.0
    rotation_deg: float = 0.0
    label_noise_rate: float = 0.0

    def __post_init__(self):
        if self.scale <= 0:
            raise ValueError(f"scale must be positive, got {self.scale}")
        if not 0.0 <= self.label_noise_rate < 1.0:
            raise ValueError(f"label_noise_rate must lie in [0, 1), got {self.label_noise_rate}")


@dataclass
class DisjointDataset:
    """Feature matrix plus labels for exactly one task."""

    features: np.ndarray
    labels: np.ndarray
    num_classes: int
    task_tag: str
    split: str = "all"
    provenance: str = ""

    def __post_init__(self):
        self.features = np.asarray(self.features, dtype=np.float64)
        self.labels = np.asarray(self.labels, dtype=np.int64)
        if self.features.ndim != 2 or len(self.features) < 1:
            raise ValueError(f"features must be a nonempty 2-D matrix, got {self.features.shape}")
        if self.labels.shape != (len(self.features),):
            raise ValueError("labels must align with feature rows")
        if self.num_classes < 2:
            raise ValueError(f"need at least 2 classes, got {self.num_classes}")
        if self.labels.min() < 0 or self.labels.max() >= self.num_classes:
            raise ValueError(f"labels out of range [0, {self.num_classes})")
        if self.task_tag not in ("A", "B"):
            raise ValueError(f"task_tag must be 'A' or 'B', got {self.task_tag!r}")

    def __len__(self):
        return len(self.features)


@dataclass
class HiddenTruth:
    """Latent-derived labels for both tasks on both datasets."""

    task_a_on_a: np.ndarray
    task_b_on_a: np.ndarray
    task_a_on_b: np.ndarray
    task_b_on_b: np.ndarray


@dataclass
class BenchmarkPair:
    """Split dataset pair with clean test labels and per-split hidden truth."""

    train_a: DisjointDataset
    train_b: DisjointDataset
    test_a: DisjointDataset
    test_b: DisjointDataset
    truth_train_a: dict = field(default_factory=dict)  # {"a": labels, "b": labels}
    truth_train_b: dict = field(default_factory=dict)
    truth_test_a: dict = field(default_factory=dict)
    truth_test_b: dict = field(default_factory=dict)


def _direction(dim, angle_deg):
    u = np.zeros(dim)
    theta = math.radians(angle_deg)
    u[0] = math.cos(theta)
    if dim > 1:
        u[1] = math.sin(theta)
    return u


def _quantile_labels(points, direction, num_classes):
    thresholds = norm.ppf(np.arange(1, num_classes) / num_classes)
    return np.searchsorted(thresholds, points @ direction).astype(np.int64)


def _apply_shift(points, shift):
    out = points * shift.scale
    if points.shape[1] >= 2 and shift.rotation_deg:
        theta = math.radians(shift.rotation_deg)
        c, s = math.cos(theta), math.sin(theta)
        rotated = out.copy()
        rotated[:, 0] = c * out[:, 0] - s * out[:, 1]
        rotated[:, 1] = s * out[:, 0] + c * out[:, 1]
        out = rotated
    offset = np.asarray(shift.mean_offset, dtype=np.float64)
    if offset.shape != (points.shape[1],):
        raise ValueError(
            f"mean_offset length {offset.shape} does not match feature dimension {points.shape[1]}"
        )
    return out + offset


def _noisy_labels(labels, num_classes, rate, rng):
    # flipped entries are redrawn uniformly over all classes
    flip = rng.random(len(labels)) < rate
    replacement = rng.integers(0, num_classes, size=len(labels))
    return np.where(flip, replacement, labels)


def _draw_latent(rng, n, dim, latent_centers, latent_weights):
    if latent_centers is None:
        return rng.normal(size=(n, dim))
    centers = np.asarray(latent_centers, dtype=np.float64)
    if centers.ndim != 2 or centers.shape[1] != dim:
        raise ValueError(f"latent centers must be (k, {dim}), got {centers.shape}")
    if latent_weights is None:
        lobes = rng.integers(0, len(centers), size=n)
    else:
        weights = np.asarray(latent_weights, dtype=np.float64)
        if weights.shape != (len(centers),) or np.any(weights < 0) or weights.sum() <= 0:
            raise ValueError("latent weights must be nonnegative, one per center")
        lobes = rng.choice(len(centers), size=n, p=weights / weights.sum())
    return centers[lobes] + rng.normal(size=(n, dim))


def gen_two_task(
    seed, n_a, n_b, c_a, c_b, shift, dim=2, task_angle_deg=30.0, latent_centers=None, latent_weights=None
):
    """Generate a disjoint dataset pair plus hidden two-task ground truth.

    The shared latent is unit-variance Gaussian by default; passing
    `latent_centers` draws it from a mixture of unit Gaussians at those
    centers (equal lobe weights unless `latent_weights` is given), giving the
    marginals explicit cluster structure.
    """
    if n_a < c_a or n_b < c_b:
        raise ValueError("each dataset needs at least as many samples as classes")
    if dim < 1:
        raise ValueError(f"feature dimension must be >= 1, got {dim}")
    rng = np.random.default_rng(seed)
    z_a = _draw_latent(rng, n_a, dim, latent_centers, latent_weights)
    z_b = _draw_latent(rng, n_b, dim, latent_centers, latent_weights)

    u_a = _direction(dim, 0.0)
    u_b = _direction(dim, task_angle_deg)
    truth = HiddenTruth(
        task_a_on_a=_quantile_labels(z_a, u_a, c_a),
        task_b_on_a=_quantile_labels(z_a, u_b, c_b),
        task_a_on_b=_quantile_labels(z_b, u_a, c_a),
        task_b_on_b=_quantile_labels(z_b, u_b, c_b),
    )

    exposed_a = _noisy_labels(truth.task_a_on_a, c_a, shift.label_noise_rate, rng)
    exposed_b = _noisy_labels(truth.task_b_on_b, c_b, shift.label_noise_rate, rng)

    lobes = "default" if latent_centers is None else [tuple(c) for c in latent_centers]
    provenance = (
        f"gen_two_task(seed={seed}, n_a={n_a}, n_b={n_b}, c_a={c_a}, c_b={c_b}, "
        f"dim={dim}, task_angle_deg={task_angle_deg}, latent_centers={lobes}, "
        f"offset={tuple(shift.mean_offset)}, scale={shift.scale}, "
        f"rotation_deg={shift.rotation_deg}, noise={shift.label_noise_rate})"
    )
    ds_a = DisjointDataset(z_a, exposed_a, c_a, "A", provenance=provenance)
    ds_b = DisjointDataset(_apply_shift(z_b, shift), exposed_b, c_b, "B", provenance=provenance)
    return ds_a, ds_b, truth


def split_indices(n, train_fraction, seed):
    """Deterministic permutation split of range(n) into train/test index arrays."""
    if not 0.0 < train_fraction < 1.0:
        raise ValueError(f"train fraction must lie in (0, 1), got {train_fraction}")
    if n < 2:
        raise ValueError("need at least 2 samples to split")
    perm = np.random.default_rng(seed).permutation(n)
    n_train = min(max(int(round(train_fraction * n)), 1), n - 1)
    return np.sort(perm[:n_train]), np.sort(perm[n_train:])


def take(dataset, indices, split_tag):
    return DisjointDataset(
        features=dataset.features[indices],
        labels=dataset.labels[indices],
        num_classes=dataset.num_classes,
        task_tag=dataset.task_tag,
        split=split_tag,
        provenance=dataset.provenance,
    )


def split(dataset, train_fraction, seed):
    """Split into disjoint, exhaustive (train, test) datasets."""
    train_idx, test_idx = split_indices(len(dataset), train_fraction, seed)
    return take(dataset, train_idx, "train"), take(dataset, test_idx, "test")


def make_benchmark_pair(
    seed,
    n_a,
    n_b,
    c_a,
    c_b,
    shift,
    dim=2,
    task_angle_deg=30.0,
    train_fraction=0.8,
    latent_centers=None,
    latent_weights=None,
):
    """Generate, split, and clean up a ready-to-train dataset pair.

    Train splits keep the noisy exposed labels; test splits carry the clean
    hidden-truth labels of their own task so evaluation is unaffected by
    injected label noise. Hidden truth for both tasks is returned per split.
    """
    ds_a, ds_b, truth = gen_two_task(
        seed, n_a, n_b, c_a, c_b, shift, dim, task_angle_deg, latent_centers, latent_weights
    )
    idx_a = split_indices(n_a, train_fraction, seed + 1)
    idx_b = split_indices(n_b, train_fraction, seed + 2)

    test_a = take(ds_a, idx_a[1], "test")
    test_a.labels = truth.task_a_on_a[idx_a[1]]
    test_b = take(ds_b, idx_b[1], "test")
    test_b.labels = truth.task_b_on_b[idx_b[1]]

    return BenchmarkPair(
        train_a=take(ds_a, idx_a[0], "train"),
        train_b=take(ds_b, idx_b[0], "train"),
        test_a=test_a,
        test_b=test_b,
        truth_train_a={"a": truth.task_a_on_a[idx_a[0]], "b": truth.task_b_on_a[idx_a[0]]},
        truth_train_b={"a": truth.task_a_on_b[idx_b[0]], "b": truth.task_b_on_b[idx_b[0]]},
        truth_test_a={"a": truth.task_a_on_a[idx_a[1]], "b": truth.task_b_on_a[idx_a[1]]},
        truth_test_b={"a": truth.task_a_on_b[idx_b[1]], "b": truth.task_b_on_b[idx_b[1]]},
    )


def save_csv(dataset, path):
    """Write `feature_0,...,feature_{d-1},label` rows; floats keep 17 significant digits."""
    d = dataset.features.shape[1]
    header = ",".join([f"feature_{i}" for i in range(d)] + ["label"])
    lines = [header]
    for row, label in zip(dataset.features, dataset.labels):
        lines.append(",".join(f"{v:.17g}" for v in row) + f",{label}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_csv(path, task_tag=None, num_classes=None, split_tag=None):
    """Parse a dataset CSV; the sidecar `<path>.meta` supplies metadata when present."""
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith("feature_0"):
        raise DataFormatError(f"{path} line 1: missing feature header row")
    n_fields = len(lines[0].split(","))
    if lines[0].split(",")[-1] != "label":
        raise DataFormatError(f"{path} line 1: last header column must be 'label'")

    features, labels = [], []
    for lineno, line in enumerate(lines[1:], start=2):
        if not line:
            continue
        parts = line.split(",")
        if len(parts) != n_fields:
            raise DataFormatError(
                f"{path} line {lineno}: expected {n_fields} fields, got {len(parts)}"
            )
        try:
            features.append([float(v) for v in parts[:-1]])
            labels.append(int(parts[-1]))
        except ValueError as exc:
            raise DataFormatError(f"{path} line {lineno}: {exc}") from exc
    if not features:
        raise ValueError(f"{path} has no data rows")

    meta = {}
    meta_path = f"{path}.meta"
    try:
        meta = load_metadata(meta_path)
    except FileNotFoundError:
        pass
    task_tag = task_tag or meta.get("task_tag", "A")
    split_tag = split_tag or meta.get("split", "all")
    if num_classes is None:
        num_classes = int(meta.get("num_classes", max(labels) + 1))
    return DisjointDataset(
        features=np.asarray(features),
        labels=np.asarray(labels),
        num_classes=num_classes,
        task_tag=task_tag,
        split=split_tag,
        provenance=meta.get("provenance", str(path)),
    )


def save_metadata(dataset, path, seed=None, shift=None):
    """Write the plain key=value sidecar describing a dataset file."""
    pairs = [
        ("task_tag", dataset.task_tag),
        ("num_classes", dataset.num_classes),
        ("n", len(dataset)),
        ("d", dataset.features.shape[1]),
        ("split", dataset.split),
    ]
    if seed is not None:
        pairs.append(("seed", seed))
    if shift is not None:
        pairs.extend(
            [
                ("mean_offset", ",".join(repr(float(v)) for v in shift.mean_offset)),
                ("scale", repr(float(shift.scale))),
                ("rotation_deg", repr(float(shift.rotation_deg))),
                ("label_noise_rate", repr(float(shift.label_noise_rate))),
            ]
        )
    pairs.append(("provenance", dataset.provenance))
    with open(path, "w", encoding="utf-8") as fh:
        for key, value in pairs:
            fh.write(f"{key} = {value}\n")


def load_metadata(path):
    meta = {}
    with open(path, "r", encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            key, _, value = line.partition("=")
            meta[key.strip()] = value.strip()
    return meta
