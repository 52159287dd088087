"""Training strategies: joint warm start, alternating selective augmentation.

The alternating loop is 1-based: odd epochs use dataset A (augmenting task B
with interpolated labels), even epochs use dataset B (augmenting task A). A
snapshot of the net taken at the previous epoch boundary supplies the soft
labels, pseudo labels, and features from which the per-sample weights are
computed over the whole active dataset before any parameter update; the
jointly warm-started net serves as the snapshot for the first alternating
epoch. Both loss terms update the trunk and both heads.

MTL-wF is the w = 0 special case and runs the identical code path, so its
parameter trajectory is bitwise equal to mtl-sa with the const-0 weight mode.

Randomness is split off the single config seed with fixed offsets: net
initialization (+101), joint-epoch shuffles (+202), alternating-epoch
shuffles (+303), and per-epoch clustering seeds (+404 + 10 * epoch, +1 for
the reference domain).
"""

from dataclasses import dataclass, replace

import numpy as np

from . import confweight, distweight, labelops, nncore, weighting

STRATEGIES = ("stl", "joint", "mtl-wf", "mtl-sa")
WEIGHT_MODES = (
    "full",
    "const-0",
    "const-0.5",
    "const-1",
    "only-wc",
    "only-wd",
    "only-wg-emd",
    "only-wg-mmd",
)

SEED_NET = 101
SEED_JOINT_SHUFFLE = 202
SEED_ALT_SHUFFLE = 303
SEED_WEIGHTS = 404

HISTORY_COLUMNS = (
    "epoch",
    "phase",
    "loss_own_task",
    "loss_aux_task",
    "train_acc_a",
    "train_acc_b",
    "test_acc_a",
    "test_acc_b",
    "mean_w",
    "fraction_w_above_0.5",
)


@dataclass
class TrainConfig:
    strategy: str = "mtl-sa"
    weight_mode: str = "full"
    epochs: int = 10
    init_epochs: int = 5
    batch_size: int = 32
    learning_rate: float = 0.0001
    temperature: float = 2.0
    kappa: float = 0.6
    lam: float = 0.1
    clusters_a: int = 4
    clusters_b: int = 4
    hidden_sizes: tuple = (16,)
    head_sizes: tuple = ()
    activation: str = "tanh"
    seed: int = 0

    def __post_init__(self):
        if self.strategy not in STRATEGIES:
            raise ValueError(f"unknown strategy {self.strategy!r}; valid: {STRATEGIES}")
        if self.weight_mode not in WEIGHT_MODES:
            raise ValueError(f"unknown weight mode {self.weight_mode!r}; valid: {WEIGHT_MODES}")
        if self.epochs < 0 or self.init_epochs < 0:
            raise ValueError("epoch counts must be nonnegative")
        if self.batch_size < 1:
            raise ValueError("batch_size must be >= 1")
        if self.learning_rate <= 0:
            raise ValueError("learning_rate must be positive")
        if self.temperature < 1.0:
            raise ValueError("temperature must be >= 1")
        if not 0.0 < self.kappa < 1.0:
            raise ValueError("kappa must lie in (0, 1)")
        if self.lam <= 0:
            raise ValueError("lambda must be positive")
        if self.clusters_a < 1 or self.clusters_b < 1:
            raise ValueError("cluster counts must be >= 1")


@dataclass
class EpochPhase:
    epoch_index: int  # 1-based
    active_dataset: str  # "A" or "B"
    frozen_snapshot: nncore.MultiTaskNet

    def __post_init__(self):
        expected = "B" if self.epoch_index % 2 == 0 else "A"
        if self.active_dataset != expected:
            raise ValueError(
                f"epoch {self.epoch_index} must use dataset {expected}, got {self.active_dataset}"
            )


def phase_for_epoch(epoch_index, frozen_snapshot):
    return EpochPhase(
        epoch_index=epoch_index,
        active_dataset="B" if epoch_index % 2 == 0 else "A",
        frozen_snapshot=frozen_snapshot,
    )


@dataclass
class EpochRecord:
    epoch: int
    phase: str
    loss_own_task: float
    loss_aux_task: float | None
    train_acc_a: float | None
    train_acc_b: float | None
    test_acc_a: float | None
    test_acc_b: float | None
    mean_w: float | None
    fraction_w_above_half: float | None


@dataclass
class EpochSummary:
    active_dataset: str
    loss_own: float
    loss_aux: float
    weights: np.ndarray
    records: list


@dataclass
class TrainResult:
    config: TrainConfig
    net_a: nncore.MultiTaskNet  # predicts task A
    net_b: nncore.MultiTaskNet  # predicts task B (same object except for STL)
    history: list
    audit_active_a: list | None = None  # weight records from the last epoch using dataset A
    audit_active_b: list | None = None


def one_hot(labels, num_classes):
    return np.eye(num_classes, dtype=np.float64)[np.asarray(labels, dtype=np.int64)]


def accuracy(net, task, dataset):
    preds = nncore.predict_batch(net, task, dataset.features)
    return float(np.mean(np.argmax(preds, axis=1) == dataset.labels))


def _mean_head_loss(net, task, inputs, targets):
    preds = nncore.predict_batch(net, task, inputs)
    rows = -(targets * np.log(np.maximum(preds, nncore.LOG_CLAMP))).sum(axis=1)
    return float(rows.mean())


def _batches(n, batch_size, rng):
    perm = rng.permutation(n)
    for start in range(0, n, batch_size):
        yield perm[start : start + batch_size]


def make_targets(frozen, augment_task, inputs, temperature=2.0):
    """Soft, pseudo, and sharpened target matrices from a frozen predictor.

    Pseudo labels come from the unsharpened soft vectors (argmax, ties to the
    lowest index); sharpening applies only to the soft component.
    """
    soft = nncore.predict_batch(frozen, augment_task, inputs)
    pseudo = one_hot(np.argmax(soft, axis=1), soft.shape[1])
    sharpened = labelops.sharpen_rows(soft, temperature)
    return soft, pseudo, sharpened


def _joint_epoch(net, adam, dataset_a, dataset_b, batch_size, rng):
    """One epoch of mixed batches, each sample supervising only its own head."""
    n_a, n_b = len(dataset_a), len(dataset_b)
    inputs = np.vstack([dataset_a.features, dataset_b.features])
    targets_a = np.vstack(
        [one_hot(dataset_a.labels, dataset_a.num_classes), np.zeros((n_b, dataset_a.num_classes))]
    )
    targets_b = np.vstack(
        [np.zeros((n_a, dataset_b.num_classes)), one_hot(dataset_b.labels, dataset_b.num_classes)]
    )
    mask_a = np.concatenate([np.ones(n_a), np.zeros(n_b)])
    mask_b = np.concatenate([np.zeros(n_a), np.ones(n_b)])
    for batch in _batches(n_a + n_b, batch_size, rng):
        nncore.backward_step(
            net,
            adam,
            inputs[batch],
            targets_a[batch],
            targets_b[batch],
            (mask_a[batch], mask_b[batch]),
        )
    return net


def joint_init(net, dataset_a, dataset_b, init_epochs, batch_size=32, learning_rate=0.0001, seed=0):
    """Warm-start `net` with mixed-batch joint training; returns the mutated net."""
    if len(dataset_a) == 0 or len(dataset_b) == 0:
        raise ValueError("joint_init requires nonempty datasets")
    adam = nncore.init_adam(net, learning_rate=learning_rate)
    rng = np.random.default_rng(seed + SEED_JOINT_SHUFFLE)
    for _ in range(init_epochs):
        _joint_epoch(net, adam, dataset_a, dataset_b, batch_size, rng)
    return net


def _epoch_weights(phase, act_ds, ref_ds, config, soft):
    """Per-sample interpolation weights for the active dataset, plus audit rows."""
    aux_task = "a" if phase.active_dataset == "B" else "b"
    frozen = phase.frozen_snapshot
    feats_act = nncore.extract_features_batch(frozen, aux_task, act_ds.features)
    feats_ref = nncore.extract_features_batch(frozen, aux_task, ref_ds.features)

    conf = confweight.confidence_weights(soft, feats_act, config.kappa)

    k_act = config.clusters_b if phase.active_dataset == "B" else config.clusters_a
    k_ref = config.clusters_a if phase.active_dataset == "B" else config.clusters_b
    seed_base = config.seed + SEED_WEIGHTS + 10 * phase.epoch_index
    model_act = distweight.fit_gmm(feats_act, k_act, seed=seed_base)
    if config.weight_mode == "only-wg-mmd":
        cluster_dists = distweight.mmd_domain_mean_distances(model_act, feats_ref)
    else:
        model_ref = distweight.fit_gmm(feats_ref, k_ref, seed=seed_base + 1)
        cluster_dists = distweight.cluster_to_domain_distance(model_act, model_ref)
    h_hat, w_g = distweight.distribution_weights(model_act, cluster_dists, config.lam)

    combine_mode = "only-wg" if config.weight_mode.startswith("only-wg") else config.weight_mode
    w = weighting.combine(conf.w_s, w_g, combine_mode, w_c=conf.w_c, w_d=conf.w_d)
    records = weighting.build_records(
        np.argmax(soft, axis=1), conf.w_c, conf.w_d, conf.w_s, h_hat, w_g, w
    )
    return w, records


def weight_audit(frozen, dataset_a, dataset_b, active, config):
    """Weight-pipeline records for one epoch driven by the given frozen net.

    `active` names the dataset whose samples are weighted ("A" or "B"); the
    canonical epoch index for that parity (1 or 2) seeds the clustering.
    Returns (weights, records) without touching any training state.
    """
    if active not in ("A", "B"):
        raise ValueError(f"active dataset must be 'A' or 'B', got {active!r}")
    phase = EpochPhase(1 if active == "A" else 2, active, frozen)
    act_ds, ref_ds = (dataset_b, dataset_a) if active == "B" else (dataset_a, dataset_b)
    aux_task = "a" if active == "B" else "b"
    soft, _, _ = make_targets(frozen, aux_task, act_ds.features, config.temperature)
    return _epoch_weights(phase, act_ds, ref_ds, config, soft)


def run_epoch(net, adam, phase, dataset_a, dataset_b, config, shuffle_rng=None):
    """One alternating epoch: weights and targets first, then mini-batch steps.

    Targets and weights come from the frozen snapshot over the entire active
    dataset before any update. The reported per-head losses are measured on
    the full active dataset at epoch start; accuracies are the caller's
    business. Returns an EpochSummary; the net and Adam state are mutated.
    """
    if shuffle_rng is None:
        shuffle_rng = np.random.default_rng(
            config.seed + SEED_ALT_SHUFFLE + 1000 * phase.epoch_index
        )
    act_ds, ref_ds = (dataset_b, dataset_a) if phase.active_dataset == "B" else (dataset_a, dataset_b)
    own_task = "b" if phase.active_dataset == "B" else "a"
    aux_task = "a" if phase.active_dataset == "B" else "b"

    soft, pseudo, sharpened = make_targets(
        phase.frozen_snapshot, aux_task, act_ds.features, config.temperature
    )
    w, records = _epoch_weights(phase, act_ds, ref_ds, config, soft)
    aux_targets = w[:, None] * pseudo + (1.0 - w)[:, None] * sharpened
    own_targets = one_hot(act_ds.labels, act_ds.num_classes)

    loss_own = _mean_head_loss(net, own_task, act_ds.features, own_targets)
    loss_aux = _mean_head_loss(net, aux_task, act_ds.features, aux_targets)

    targets_a, targets_b = (
        (aux_targets, own_targets) if phase.active_dataset == "B" else (own_targets, aux_targets)
    )
    for batch in _batches(len(act_ds), config.batch_size, shuffle_rng):
        nncore.backward_step(net, adam, act_ds.features[batch], targets_a[batch], targets_b[batch])

    return EpochSummary(
        active_dataset=phase.active_dataset,
        loss_own=loss_own,
        loss_aux=loss_aux,
        weights=w,
        records=records,
    )


def _record(epoch, phase_tag, loss_own, loss_aux, net_a, net_b, dataset_a, dataset_b, test_a, test_b, weights=None):
    return EpochRecord(
        epoch=epoch,
        phase=phase_tag,
        loss_own_task=loss_own,
        loss_aux_task=loss_aux,
        train_acc_a=accuracy(net_a, "a", dataset_a) if dataset_a is not None else None,
        train_acc_b=accuracy(net_b, "b", dataset_b) if dataset_b is not None else None,
        test_acc_a=accuracy(net_a, "a", test_a) if test_a is not None else None,
        test_acc_b=accuracy(net_b, "b", test_b) if test_b is not None else None,
        mean_w=float(weights.mean()) if weights is not None else None,
        fraction_w_above_half=float(np.mean(weights > 0.5)) if weights is not None else None,
    )


def _train_single_task(config, task, dataset, test_set, history):
    net = nncore.init_net(
        (dataset.features.shape[1],) + tuple(config.hidden_sizes),
        dataset.num_classes if task == "a" else 2,
        dataset.num_classes if task == "b" else 2,
        seed=config.seed + SEED_NET,
        head_sizes=config.head_sizes,
        activation=config.activation,
    )
    adam = nncore.init_adam(net, learning_rate=config.learning_rate)
    rng = np.random.default_rng(config.seed + SEED_JOINT_SHUFFLE)
    targets = one_hot(dataset.labels, dataset.num_classes)
    total_epochs = config.init_epochs + config.epochs
    for epoch in range(1, total_epochs + 1):
        loss_own = _mean_head_loss(net, task, dataset.features, targets)
        for batch in _batches(len(dataset), config.batch_size, rng):
            if task == "a":
                nncore.backward_step(net, adam, dataset.features[batch], targets[batch], None)
            else:
                nncore.backward_step(net, adam, dataset.features[batch], None, targets[batch])
        history.append(
            _record(
                epoch,
                f"stl-{'A' if task == 'a' else 'B'}",
                loss_own,
                None,
                net_a=net if task == "a" else None,
                net_b=net if task == "b" else None,
                dataset_a=dataset if task == "a" else None,
                dataset_b=dataset if task == "b" else None,
                test_a=test_set if task == "a" else None,
                test_b=test_set if task == "b" else None,
            )
        )
    return net


def train(config, dataset_a, dataset_b, test_a=None, test_b=None):
    """Train per the configured strategy; returns nets plus per-epoch history."""
    if len(dataset_a) == 0 or len(dataset_b) == 0:
        raise ValueError("train requires nonempty datasets")
    if dataset_a.features.shape[1] != dataset_b.features.shape[1]:
        raise ValueError("datasets must share a feature dimension")

    history = []
    if config.strategy == "stl":
        net_a = _train_single_task(config, "a", dataset_a, test_a, history)
        net_b = _train_single_task(replace(config, seed=config.seed + 1), "b", dataset_b, test_b, history)
        return TrainResult(config=config, net_a=net_a, net_b=net_b, history=history)

    net = nncore.init_net(
        (dataset_a.features.shape[1],) + tuple(config.hidden_sizes),
        dataset_a.num_classes,
        dataset_b.num_classes,
        seed=config.seed + SEED_NET,
        head_sizes=config.head_sizes,
        activation=config.activation,
    )
    adam = nncore.init_adam(net, learning_rate=config.learning_rate)
    joint_rng = np.random.default_rng(config.seed + SEED_JOINT_SHUFFLE)

    targets_a_full = one_hot(dataset_a.labels, dataset_a.num_classes)
    targets_b_full = one_hot(dataset_b.labels, dataset_b.num_classes)

    def joint_start_loss():
        loss_a = _mean_head_loss(net, "a", dataset_a.features, targets_a_full)
        loss_b = _mean_head_loss(net, "b", dataset_b.features, targets_b_full)
        n_a, n_b = len(dataset_a), len(dataset_b)
        return (loss_a * n_a + loss_b * n_b) / (n_a + n_b)

    joint_epochs = (
        config.init_epochs + config.epochs if config.strategy == "joint" else config.init_epochs
    )
    for epoch in range(1, joint_epochs + 1):
        loss_own = joint_start_loss()
        _joint_epoch(net, adam, dataset_a, dataset_b, config.batch_size, joint_rng)
        history.append(
            _record(epoch, "joint", loss_own, None, net, net, dataset_a, dataset_b, test_a, test_b)
        )

    if config.strategy == "joint":
        return TrainResult(config=config, net_a=net, net_b=net, history=history)

    # mtl-wf is the constant-zero special case of the same alternating loop
    run_config = config
    if config.strategy == "mtl-wf":
        run_config = replace(config, weight_mode="const-0")

    shuffle_rng = np.random.default_rng(config.seed + SEED_ALT_SHUFFLE)
    frozen = nncore.snapshot(net)
    audit_a = audit_b = None
    for t in range(1, config.epochs + 1):
        phase = phase_for_epoch(t, frozen)
        summary = run_epoch(net, adam, phase, dataset_a, dataset_b, run_config, shuffle_rng)
        history.append(
            _record(
                t,
                phase.active_dataset,
                summary.loss_own,
                summary.loss_aux,
                net,
                net,
                dataset_a,
                dataset_b,
                test_a,
                test_b,
                weights=summary.weights,
            )
        )
        if phase.active_dataset == "A":
            audit_a = summary.records
        else:
            audit_b = summary.records
        frozen = nncore.snapshot(net)

    return TrainResult(
        config=config,
        net_a=net,
        net_b=net,
        history=history,
        audit_active_a=audit_a,
        audit_active_b=audit_b,
    )


def _format_field(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return f"{value:.17g}"
    return str(value)


def write_history(records, path):
    """Write per-epoch records as comma-separated text, one row per epoch."""
    lines = [",".join(HISTORY_COLUMNS)]
    for rec in records:
        lines.append(
            ",".join(
                _format_field(v)
                for v in (
                    rec.epoch,
                    rec.phase,
                    rec.loss_own_task,
                    rec.loss_aux_task,
                    rec.train_acc_a,
                    rec.train_acc_b,
                    rec.test_acc_a,
                    rec.test_acc_b,
                    rec.mean_w,
                    rec.fraction_w_above_half,
                )
            )
        )
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_history(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or tuple(lines[0].split(",")) != HISTORY_COLUMNS:
        raise ValueError(f"{path} is not a history file")
    records = []
    for line in lines[1:]:
        if not line:
            continue
        parts = line.split(",")
        opt = lambda s: None if s == "" else float(s)
        records.append(
            EpochRecord(
                epoch=int(parts[0]),
                phase=parts[1],
                loss_own_task=float(parts[2]),
                loss_aux_task=opt(parts[3]),
                train_acc_a=opt(parts[4]),
                train_acc_b=opt(parts[5]),
                test_acc_a=opt(parts[6]),
                test_acc_b=opt(parts[7]),
                mean_w=opt(parts[8]),
                fraction_w_above_half=opt(parts[9]),
            )
        )
    return records
