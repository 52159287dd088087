"""Feedforward multi-task classifier: shared trunk, two softmax heads.

The net is a plain stack of dense layers. `layer_sizes` describes the trunk
(first entry is the input width); each head is an optional stack of hidden
layers (`head_sizes`, same widths for both heads, independent parameters)
followed by a linear classification layer whose output is passed through a
numerically stabilized softmax. Gradients are computed by exact
backpropagation and applied with Adam. All arithmetic is float64.
"""

from dataclasses import dataclass, field

import numpy as np

PROB_FLOOR = 1e-308  # keeps softmax outputs strictly positive under underflow
LOG_CLAMP = 1e-12  # floor applied to predictions before log in cross-entropy

_ACTIVATIONS = ("tanh", "relu")
_TASKS = ("a", "b")

CHECKPOINT_MAGIC = "mtlsa-checkpoint"
CHECKPOINT_VERSION = 1


@dataclass
class MultiTaskNet:
    """Shared trunk plus per-task heads; parameters are (W, b) pairs."""

    layer_sizes: tuple
    head_sizes: tuple
    num_classes_a: int
    num_classes_b: int
    activation: str
    trunk: list = field(default_factory=list)
    head_a: list = field(default_factory=list)
    head_b: list = field(default_factory=list)

    def head(self, task):
        _check_task(task)
        return self.head_a if task == "a" else self.head_b

    def num_classes(self, task):
        _check_task(task)
        return self.num_classes_a if task == "a" else self.num_classes_b


@dataclass
class AdamState:
    """Per-parameter Adam accumulators, aligned with `param_arrays` order."""

    first_moment: list
    second_moment: list
    step_count: int
    learning_rate: float
    beta1: float
    beta2: float
    epsilon: float


def _check_task(task):
    if task not in _TASKS:
        raise ValueError(f"task selector must be 'a' or 'b', got {task!r}")


def _activate(z, activation):
    if activation == "tanh":
        return np.tanh(z)
    return np.maximum(z, 0.0)


def _activate_grad(z, h, activation):
    # h is the cached activation output for z
    if activation == "tanh":
        return 1.0 - h * h
    return (z > 0.0).astype(np.float64)


def _glorot_uniform(rng, fan_in, fan_out):
    limit = np.sqrt(6.0 / (fan_in + fan_out))
    return rng.uniform(-limit, limit, size=(fan_in, fan_out))


def init_net(layer_sizes, num_classes_a, num_classes_b, seed, head_sizes=(), activation="tanh"):
    """Build a deterministic net for `seed`; weights Glorot-uniform, biases zero."""
    layer_sizes = tuple(int(s) for s in layer_sizes)
    head_sizes = tuple(int(s) for s in head_sizes)
    if len(layer_sizes) < 1:
        raise ValueError("layer_sizes must contain at least the input width")
    for s in layer_sizes + head_sizes + (num_classes_a, num_classes_b):
        if s < 1:
            raise ValueError(f"all layer sizes and class counts must be >= 1, got {s}")
    if activation not in _ACTIVATIONS:
        raise ValueError(f"activation must be one of {_ACTIVATIONS}, got {activation!r}")

    rng = np.random.default_rng(seed)
    net = MultiTaskNet(
        layer_sizes=layer_sizes,
        head_sizes=head_sizes,
        num_classes_a=int(num_classes_a),
        num_classes_b=int(num_classes_b),
        activation=activation,
    )
    for fan_in, fan_out in zip(layer_sizes[:-1], layer_sizes[1:]):
        net.trunk.append((_glorot_uniform(rng, fan_in, fan_out), np.zeros(fan_out)))
    for head, n_cls in ((net.head_a, net.num_classes_a), (net.head_b, net.num_classes_b)):
        widths = (layer_sizes[-1],) + head_sizes + (n_cls,)
        for fan_in, fan_out in zip(widths[:-1], widths[1:]):
            head.append((_glorot_uniform(rng, fan_in, fan_out), np.zeros(fan_out)))
    return net


def param_arrays(net):
    """All parameter arrays in a fixed order (trunk, head a, head b; W then b)."""
    out = []
    for stack in (net.trunk, net.head_a, net.head_b):
        for w, b in stack:
            out.append(w)
            out.append(b)
    return out


def softmax(logits):
    z = np.asarray(logits, dtype=np.float64)
    z = z - z.max(axis=-1, keepdims=True)
    e = np.exp(z)
    p = e / e.sum(axis=-1, keepdims=True)
    return np.maximum(p, PROB_FLOOR)


def _trunk_forward(net, x):
    h = x
    pre, acts = [], [h]
    for w, b in net.trunk:
        z = h @ w + b
        h = _activate(z, net.activation)
        pre.append(z)
        acts.append(h)
    return pre, acts


def _head_forward(net, task, trunk_out):
    head = net.head(task)
    h = trunk_out
    pre, acts = [], [h]
    for w, b in head[:-1]:
        z = h @ w + b
        h = _activate(z, net.activation)
        pre.append(z)
        acts.append(h)
    w, b = head[-1]
    logits = h @ w + b
    return pre, acts, logits


def _check_input(net, x):
    x = np.asarray(x, dtype=np.float64)
    if x.shape[-1] != net.layer_sizes[0]:
        raise ValueError(
            f"input width {x.shape[-1]} does not match net input width {net.layer_sizes[0]}"
        )
    return x


def predict_batch(net, task, inputs):
    """Softmax output of the selected head for a batch of inputs, shape (n, C)."""
    x = _check_input(net, np.atleast_2d(inputs))
    _, acts = _trunk_forward(net, x)
    _, _, logits = _head_forward(net, task, acts[-1])
    return softmax(logits)


def predict(net, task, input_vector):
    x = _check_input(net, input_vector)
    if x.ndim != 1:
        raise ValueError("predict expects a single input vector; use predict_batch")
    return predict_batch(net, task, x[None, :])[0]


def extract_features_batch(net, task, inputs):
    """Activations feeding the selected head's classification layer, shape (n, f)."""
    x = _check_input(net, np.atleast_2d(inputs))
    _, acts = _trunk_forward(net, x)
    _, head_acts, _ = _head_forward(net, task, acts[-1])
    return head_acts[-1]


def extract_features(net, task, input_vector):
    x = _check_input(net, input_vector)
    if x.ndim != 1:
        raise ValueError("extract_features expects a single input vector")
    return extract_features_batch(net, task, x[None, :])[0]


def cross_entropy(target, prediction):
    """-sum(target * log(prediction)); supports soft targets."""
    t = np.asarray(target, dtype=np.float64)
    p = np.asarray(prediction, dtype=np.float64)
    if t.shape != p.shape:
        raise ValueError(f"target/prediction shape mismatch: {t.shape} vs {p.shape}")
    if np.any(p <= 0):
        raise ValueError("prediction entries must be strictly positive")
    return float(-(t * np.log(np.maximum(p, LOG_CLAMP))).sum())


def _normalize_mask(mask, targets, n, name):
    if targets is None:
        if mask is not None and np.any(np.asarray(mask) != 0):
            raise ValueError(f"{name} mask is active but no targets were given")
        return None
    if mask is None:
        return np.ones(n)
    m = np.asarray(mask, dtype=np.float64)
    if m.shape != (n,):
        raise ValueError(f"{name} mask must have shape ({n},), got {m.shape}")
    return m


def loss_and_gradients(net, inputs, targets_a, targets_b, mask_a=None, mask_b=None):
    """Mean masked two-head cross-entropy and its exact gradients.

    Loss = (1/n) * sum_i [mask_a_i * CE(ta_i, pa_i) + mask_b_i * CE(tb_i, pb_i)].
    Returns (loss, grads) with grads aligned to `param_arrays(net)`.
    """
    x = _check_input(net, np.atleast_2d(np.asarray(inputs, dtype=np.float64)))
    n = x.shape[0]
    if n == 0:
        raise ValueError("batch must be nonempty")
    mask_a = _normalize_mask(mask_a, targets_a, n, "task a")
    mask_b = _normalize_mask(mask_b, targets_b, n, "task b")

    trunk_pre, trunk_acts = _trunk_forward(net, x)
    trunk_out = trunk_acts[-1]

    loss = 0.0
    d_trunk_out = np.zeros_like(trunk_out)
    head_grads = {"a": None, "b": None}
    for task, targets, mask in (("a", targets_a, mask_a), ("b", targets_b, mask_b)):
        head = net.head(task)
        grads = [(np.zeros_like(w), np.zeros_like(b)) for w, b in head]
        head_grads[task] = grads
        if targets is None:
            continue
        t = np.atleast_2d(np.asarray(targets, dtype=np.float64))
        if t.shape != (n, net.num_classes(task)):
            raise ValueError(
                f"task {task} targets must have shape ({n}, {net.num_classes(task)}), got {t.shape}"
            )
        pre, acts, logits = _head_forward(net, task, trunk_out)
        p = softmax(logits)
        ce_rows = -(t * np.log(np.maximum(p, LOG_CLAMP))).sum(axis=1)
        loss += float((mask * ce_rows).sum()) / n

        dlogits = (p - t) * (mask / n)[:, None]
        w_cls, _ = head[-1]
        grads[-1] = (acts[-1].T @ dlogits, dlogits.sum(axis=0))
        dh = dlogits @ w_cls.T
        for j in range(len(head) - 2, -1, -1):
            dz = dh * _activate_grad(pre[j], acts[j + 1], net.activation)
            grads[j] = (acts[j].T @ dz, dz.sum(axis=0))
            dh = dz @ head[j][0].T
        d_trunk_out += dh

    trunk_grads = [None] * len(net.trunk)
    dh = d_trunk_out
    for j in range(len(net.trunk) - 1, -1, -1):
        dz = dh * _activate_grad(trunk_pre[j], trunk_acts[j + 1], net.activation)
        trunk_grads[j] = (trunk_acts[j].T @ dz, dz.sum(axis=0))
        dh = dz @ net.trunk[j][0].T

    flat = []
    for stack in (trunk_grads, head_grads["a"], head_grads["b"]):
        for gw, gb in stack:
            flat.append(gw)
            flat.append(gb)
    return loss, flat


def init_adam(net, learning_rate=0.0001, beta1=0.9, beta2=0.999, epsilon=1e-8):
    params = param_arrays(net)
    return AdamState(
        first_moment=[np.zeros_like(p) for p in params],
        second_moment=[np.zeros_like(p) for p in params],
        step_count=0,
        learning_rate=float(learning_rate),
        beta1=float(beta1),
        beta2=float(beta2),
        epsilon=float(epsilon),
    )


def backward_step(net, adam_state, batch_inputs, batch_targets_task_a, batch_targets_task_b, loss_mask=(None, None)):
    """One exact-backprop Adam step; returns (net, mean batch loss before the update)."""
    mask_a, mask_b = loss_mask
    loss, grads = loss_and_gradients(
        net, batch_inputs, batch_targets_task_a, batch_targets_task_b, mask_a, mask_b
    )
    adam_state.step_count += 1
    t = adam_state.step_count
    b1, b2 = adam_state.beta1, adam_state.beta2
    bias1 = 1.0 - b1**t
    bias2 = 1.0 - b2**t
    for p, m, v, g in zip(param_arrays(net), adam_state.first_moment, adam_state.second_moment, grads):
        m *= b1
        m += (1.0 - b1) * g
        v *= b2
        v += (1.0 - b2) * (g * g)
        p -= adam_state.learning_rate * (m / bias1) / (np.sqrt(v / bias2) + adam_state.epsilon)
    return net, loss


def snapshot(net):
    """Deep value copy; later updates to the original do not affect it."""
    copy = MultiTaskNet(
        layer_sizes=net.layer_sizes,
        head_sizes=net.head_sizes,
        num_classes_a=net.num_classes_a,
        num_classes_b=net.num_classes_b,
        activation=net.activation,
    )
    copy.trunk = [(w.copy(), b.copy()) for w, b in net.trunk]
    copy.head_a = [(w.copy(), b.copy()) for w, b in net.head_a]
    copy.head_b = [(w.copy(), b.copy()) for w, b in net.head_b]
    return copy


def nets_equal(net1, net2):
    """Bitwise structural and parameter equality."""
    if (
        net1.layer_sizes != net2.layer_sizes
        or net1.head_sizes != net2.head_sizes
        or net1.num_classes_a != net2.num_classes_a
        or net1.num_classes_b != net2.num_classes_b
        or net1.activation != net2.activation
    ):
        return False
    p1, p2 = param_arrays(net1), param_arrays(net2)
    return len(p1) == len(p2) and all(np.array_equal(a, b) for a, b in zip(p1, p2))


def _named_arrays(net):
    for stack_name, stack in (("trunk", net.trunk), ("head_a", net.head_a), ("head_b", net.head_b)):
        for i, (w, b) in enumerate(stack):
            yield f"{stack_name}.{i}.W", w
            yield f"{stack_name}.{i}.b", b


def save_checkpoint(net, path):
    """Write a self-describing text checkpoint, bit-exact on round trip."""
    lines = [f"{CHECKPOINT_MAGIC} {CHECKPOINT_VERSION}"]
    lines.append("layer_sizes=" + ",".join(str(s) for s in net.layer_sizes))
    lines.append("head_sizes=" + ",".join(str(s) for s in net.head_sizes))
    lines.append(f"num_classes_a={net.num_classes_a}")
    lines.append(f"num_classes_b={net.num_classes_b}")
    lines.append(f"activation={net.activation}")
    for name, arr in _named_arrays(net):
        mat = np.atleast_2d(arr)
        lines.append(f"array {name} {' '.join(str(d) for d in arr.shape)}")
        for row in mat:
            lines.append(" ".join(f"{v:.17g}" for v in row))
    lines.append("end")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")


def load_checkpoint(path):
    with open(path, "r", encoding="utf-8") as fh:
        lines = [ln.rstrip("\n") for ln in fh]
    if not lines or not lines[0].startswith(CHECKPOINT_MAGIC):
        raise ValueError(f"{path} is not a checkpoint file")
    version = int(lines[0].split()[1])
    if version != CHECKPOINT_VERSION:
        raise ValueError(f"unsupported checkpoint version {version}")

    header = {}
    idx = 1
    while idx < len(lines) and "=" in lines[idx]:
        key, _, value = lines[idx].partition("=")
        header[key] = value
        idx += 1

    def _int_tuple(text):
        return tuple(int(t) for t in text.split(",") if t)

    net = MultiTaskNet(
        layer_sizes=_int_tuple(header["layer_sizes"]),
        head_sizes=_int_tuple(header["head_sizes"]),
        num_classes_a=int(header["num_classes_a"]),
        num_classes_b=int(header["num_classes_b"]),
        activation=header["activation"],
    )
    arrays = {}
    while idx < len(lines) and lines[idx] != "end":
        tag = lines[idx].split()
        if tag[0] != "array":
            raise ValueError(f"unexpected checkpoint line: {lines[idx]!r}")
        name, shape = tag[1], tuple(int(d) for d in tag[2:])
        n_rows = shape[0] if len(shape) == 2 else 1
        rows = [
            [float(v) for v in lines[idx + 1 + r].split()]
            for r in range(n_rows)
        ]
        arr = np.asarray(rows, dtype=np.float64)
        arrays[name] = arr.reshape(shape)
        idx += 1 + n_rows
    if idx >= len(lines):
        raise ValueError("checkpoint is truncated (missing end marker)")

    def _stack(prefix, count):
        return [(arrays[f"{prefix}.{i}.W"], arrays[f"{prefix}.{i}.b"]) for i in range(count)]

    net.trunk = _stack("trunk", len(net.layer_sizes) - 1)
    n_head_layers = len(net.head_sizes) + 1
    net.head_a = _stack("head_a", n_head_layers)
    net.head_b = _stack("head_b", n_head_layers)
    return net
