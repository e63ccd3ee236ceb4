"""Small trainable 2D convolutional networks over (time x channel) windows.

Convolutions are valid (no padding), stride 1, cross-correlation semantics,
each followed by a ReLU and a 2x1 max-pooling stage; the tail is flatten,
one fully connected layer and a softmax. Backpropagation is written out by
hand and validated against central finite differences (grad_check).

A window enters the network as a single feature map of height t (time) and
width equal to the channel count, so a kernel of shape 12x2 spans 12 time
steps across 2 channels.
"""
from __future__ import annotations

import json
from dataclasses import dataclass

import numpy as np

from .errors import (
    ArchitectureError,
    FormatError,
    InputError,
    ParameterError,
    ShapeError,
    TrainingDivergedError,
    UnsupportedVersionError,
)
from .ingest import Dataset

PARAMS_FORMAT = "convnet-params"
PARAMS_VERSION = 1


@dataclass(frozen=True)
class LayerSpec:
    kind: str  # conv | maxpool | flatten | dense | softmax
    filters: int = 0
    kernel_h: int = 0
    kernel_w: int = 0
    pool_h: int = 2
    pool_w: int = 1
    units: int = 0


def conv(filters: int, kernel_h: int, kernel_w: int) -> LayerSpec:
    return LayerSpec("conv", filters=filters, kernel_h=kernel_h, kernel_w=kernel_w)


def maxpool() -> LayerSpec:
    return LayerSpec("maxpool")


def flatten() -> LayerSpec:
    return LayerSpec("flatten")


def dense(units: int) -> LayerSpec:
    return LayerSpec("dense", units=units)


def softmax() -> LayerSpec:
    return LayerSpec("softmax")


@dataclass(frozen=True)
class NetworkConfig:
    name: str
    layers: tuple[LayerSpec, ...]
    input_h: int
    input_w: int

    def __post_init__(self):
        object.__setattr__(self, "layers", tuple(self.layers))

    @property
    def n_classes(self) -> int:
        for spec in self.layers:
            if spec.kind == "dense":
                return spec.units
        raise ArchitectureError(f"{self.name}: network has no dense layer")

    def pool_layer_count(self) -> int:
        return sum(1 for spec in self.layers if spec.kind == "maxpool")


@dataclass(frozen=True)
class TrainingConfig:
    epochs: int = 50
    batch_size: int = 32
    learning_rate: float = 0.01
    momentum: float = 0.9
    seed: int = 0


@dataclass
class NetworkParams:
    """Learned weights; shapes follow the owning NetworkConfig."""

    conv_kernels: list[np.ndarray]  # each [filters, in_maps, kh, kw]
    conv_biases: list[np.ndarray]  # each [filters]
    dense_weights: np.ndarray  # [flat_dim, units]
    dense_bias: np.ndarray  # [units]


@dataclass(frozen=True)
class ForwardTrace:
    """Per-layer outputs of one window's forward pass."""

    layer_outputs: tuple[np.ndarray, ...]
    pool_taps: tuple[np.ndarray, ...]  # flattened pool outputs, layer order
    logits: np.ndarray


# Table-driven presets: (filters, kernel_h, kernel_w) per conv stage. Kernel
# widths are clamped to the incoming map width when the preset is built, so
# the same architecture runs on inputs with few channels; kernel heights are
# never clamped (a too-short window is an error, not a different network).
PRESET_CONV_STAGES = {
    "convnet1": ((24, 12, 2), (32, 12, 2)),
    "convnet2": ((24, 6, 1), (32, 8, 1), (40, 10, 1)),
    "convnet3": ((24, 12, 1), (32, 12, 1), (40, 6, 1), (48, 2, 1)),
}


def preset(name: str, input_h: int, input_w: int, n_classes: int) -> NetworkConfig:
    """Build one of the named architectures for the given input shape.

    Raises ArchitectureError (naming the offending layer) when any feature
    map extent would drop below 1.
    """
    if name not in PRESET_CONV_STAGES:
        raise ParameterError(
            f"unknown preset {name!r}; choose from {sorted(PRESET_CONV_STAGES)}"
        )
    if n_classes < 2:
        raise ParameterError("a classifier needs at least 2 classes")
    layers: list[LayerSpec] = []
    w = input_w
    for filters, kh, kw in PRESET_CONV_STAGES[name]:
        kw = min(kw, w)
        layers.append(conv(filters, kh, kw))
        layers.append(maxpool())
        w = w - kw + 1
    layers += [flatten(), dense(n_classes), softmax()]
    config = NetworkConfig(name=name, layers=tuple(layers), input_h=input_h, input_w=input_w)
    propagate_shapes(config)  # validates feasibility
    return config


def propagate_shapes(config: NetworkConfig) -> list[tuple[int, ...]]:
    """Output shape of every layer, validating structure and extents.

    Shapes are (maps, h, w) until flatten, then (units,). Conv layers must
    be immediately followed by a maxpool; the tail must be flatten, dense,
    softmax.
    """
    shapes: list[tuple[int, ...]] = []
    maps, h, w = 1, config.input_h, config.input_w
    flat: int | None = None
    for i, spec in enumerate(config.layers):
        where = f"{config.name}: layer {i + 1} ({spec.kind})"
        if spec.kind == "conv":
            if flat is not None:
                raise ArchitectureError(f"{where} appears after flatten")
            nxt = config.layers[i + 1] if i + 1 < len(config.layers) else None
            if nxt is None or nxt.kind != "maxpool":
                raise ArchitectureError(f"{where} must be immediately followed by a maxpool")
            h = h - spec.kernel_h + 1
            w = w - spec.kernel_w + 1
            maps = spec.filters
            if h < 1 or w < 1:
                raise ArchitectureError(
                    f"{where} with kernel {spec.kernel_h}x{spec.kernel_w} "
                    f"would produce a {h}x{w} map"
                )
            shapes.append((maps, h, w))
        elif spec.kind == "maxpool":
            if flat is not None:
                raise ArchitectureError(f"{where} appears after flatten")
            h = h // spec.pool_h
            if h < 1:
                raise ArchitectureError(f"{where} would produce a {h}-row map")
            shapes.append((maps, h, w))
        elif spec.kind == "flatten":
            flat = maps * h * w
            shapes.append((flat,))
        elif spec.kind == "dense":
            if flat is None:
                raise ArchitectureError(f"{where} must come after flatten")
            if spec.units < 1:
                raise ArchitectureError(f"{where} needs at least 1 unit")
            flat = spec.units
            shapes.append((flat,))
        elif spec.kind == "softmax":
            if flat is None:
                raise ArchitectureError(f"{where} must come after flatten")
            shapes.append((flat,))
        else:
            raise ArchitectureError(f"{where}: unknown layer kind")
    if not shapes or config.layers[-1].kind != "softmax":
        raise ArchitectureError(f"{config.name}: network must end with a softmax layer")
    return shapes


def init_params(config: NetworkConfig, seed: int = 0) -> NetworkParams:
    """Fan-in scaled uniform weights, zero biases, deterministic per seed."""
    rng = np.random.default_rng(seed)
    shapes = propagate_shapes(config)
    kernels: list[np.ndarray] = []
    biases: list[np.ndarray] = []
    maps = 1
    prev_flat = 0
    dense_w = dense_b = None
    for spec, shape in zip(config.layers, shapes):
        if spec.kind == "conv":
            fan_in = maps * spec.kernel_h * spec.kernel_w
            lim = 1.0 / np.sqrt(fan_in)
            kernels.append(
                rng.uniform(-lim, lim, size=(spec.filters, maps, spec.kernel_h, spec.kernel_w))
            )
            biases.append(np.zeros(spec.filters))
            maps = spec.filters
        elif spec.kind == "dense":
            lim = 1.0 / np.sqrt(prev_flat)
            dense_w = rng.uniform(-lim, lim, size=(prev_flat, spec.units))
            dense_b = np.zeros(spec.units)
        if len(shape) == 1:
            prev_flat = shape[0]
    return NetworkParams(
        conv_kernels=kernels, conv_biases=biases, dense_weights=dense_w, dense_bias=dense_b
    )


def parameter_count(params: NetworkParams) -> int:
    total = sum(k.size for k in params.conv_kernels)
    total += sum(b.size for b in params.conv_biases)
    total += params.dense_weights.size + params.dense_bias.size
    return total


# ---------------------------------------------------------------------------
# forward / backward primitives (batched; leading axis is the batch)
# ---------------------------------------------------------------------------


def _conv_forward_batch(x: np.ndarray, kernels: np.ndarray, biases: np.ndarray) -> np.ndarray:
    b, c, h, w = x.shape
    f, ck, kh, kw = kernels.shape
    if ck != c:
        raise ShapeError(f"kernel expects {ck} input maps, got {c}")
    if kh > h or kw > w:
        raise ShapeError(f"kernel {kh}x{kw} does not fit inside a {h}x{w} map")
    oh, ow = h - kh + 1, w - kw + 1
    out = np.broadcast_to(biases[None, :, None, None], (b, f, oh, ow)).copy()
    for ki in range(kh):
        for kj in range(kw):
            out += np.einsum(
                "bcij,fc->bfij",
                x[:, :, ki : ki + oh, kj : kj + ow],
                kernels[:, :, ki, kj],
                optimize=True,
            )
    return out


def _conv_backward_batch(x, kernels, grad_out):
    b, c, h, w = x.shape
    f, _, kh, kw = kernels.shape
    oh, ow = h - kh + 1, w - kw + 1
    grad_b = grad_out.sum(axis=(0, 2, 3))
    grad_k = np.empty_like(kernels)
    grad_x = np.zeros_like(x)
    for ki in range(kh):
        for kj in range(kw):
            xs = x[:, :, ki : ki + oh, kj : kj + ow]
            grad_k[:, :, ki, kj] = np.einsum("bfij,bcij->fc", grad_out, xs, optimize=True)
            grad_x[:, :, ki : ki + oh, kj : kj + ow] += np.einsum(
                "bfij,fc->bcij", grad_out, kernels[:, :, ki, kj], optimize=True
            )
    return grad_k, grad_b, grad_x


def _maxpool_forward_batch(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    b, c, h, w = x.shape
    if h < 2:
        raise ShapeError(f"max pooling needs at least 2 rows, got {h}")
    h2 = h // 2
    pairs = x[:, :, : 2 * h2, :].reshape(b, c, h2, 2, w)
    # argmax returns the first maximum, so ties route to the upper row
    arg = pairs.argmax(axis=3)
    out = np.take_along_axis(pairs, arg[:, :, :, None, :], axis=3)[:, :, :, 0, :]
    return out, arg


def _maxpool_backward_batch(grad_out, arg, x_shape):
    b, c, h, w = x_shape
    h2 = h // 2
    grad_pairs = np.zeros((b, c, h2, 2, w))
    np.put_along_axis(grad_pairs, arg[:, :, :, None, :], grad_out[:, :, :, None, :], axis=3)
    grad_x = np.zeros(x_shape)
    grad_x[:, :, : 2 * h2, :] = grad_pairs.reshape(b, c, 2 * h2, w)
    return grad_x


def _softmax_rows(logits: np.ndarray) -> np.ndarray:
    shifted = logits - logits.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    return e / e.sum(axis=1, keepdims=True)


def _forward_batch(params, config, x, keep_cache=False, keep_pools=False):
    """Run a [b, 1, h, w] batch through the network.

    Returns (logits, probs, pool_outputs, cache); cache entries carry what
    the matching backward step needs.
    """
    cache = [] if keep_cache else None
    pools = [] if keep_pools else None
    cur = x
    ci = 0
    logits = None
    for spec in config.layers:
        if spec.kind == "conv":
            pre = _conv_forward_batch(cur, params.conv_kernels[ci], params.conv_biases[ci])
            if keep_cache:
                cache.append(("conv", ci, cur, pre))
            cur = np.maximum(pre, 0.0)
            ci += 1
        elif spec.kind == "maxpool":
            out, arg = _maxpool_forward_batch(cur)
            if keep_cache:
                cache.append(("maxpool", arg, cur.shape))
            cur = out
            if keep_pools:
                pools.append(cur)
        elif spec.kind == "flatten":
            if keep_cache:
                cache.append(("flatten", cur.shape))
            cur = cur.reshape(cur.shape[0], -1)
        elif spec.kind == "dense":
            if keep_cache:
                cache.append(("dense", cur))
            cur = cur @ params.dense_weights + params.dense_bias
        elif spec.kind == "softmax":
            logits = cur
            cur = _softmax_rows(cur)
    return logits, cur, pools, cache


def _backward_batch(params, grad_logits, cache):
    """Walk the cache in reverse; returns gradients per parameter array."""
    grad_kernels = [None] * len(params.conv_kernels)
    grad_biases = [None] * len(params.conv_biases)
    grad_dense_w = grad_dense_b = None
    g = grad_logits
    for entry in reversed(cache):
        kind = entry[0]
        if kind == "dense":
            _, inp = entry
            grad_dense_w = inp.T @ g
            grad_dense_b = g.sum(axis=0)
            g = g @ params.dense_weights.T
        elif kind == "flatten":
            _, shape = entry
            g = g.reshape(shape)
        elif kind == "maxpool":
            _, arg, shape = entry
            g = _maxpool_backward_batch(g, arg, shape)
        elif kind == "conv":
            _, ci, inp, pre = entry
            g = g * (pre > 0.0)
            gk, gb, g = _conv_backward_batch(inp, params.conv_kernels[ci], g)
            grad_kernels[ci] = gk
            grad_biases[ci] = gb
    return grad_kernels, grad_biases, grad_dense_w, grad_dense_b


# ---------------------------------------------------------------------------
# public single-window operations
# ---------------------------------------------------------------------------


def conv2d_forward(x, kernels, biases) -> np.ndarray:
    """Valid cross-correlation of one [maps, h, w] input plus bias."""
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"expected [maps, h, w] input, got rank {x.ndim}")
    kernels = np.asarray(kernels, dtype=np.float64)
    biases = np.asarray(biases, dtype=np.float64)
    return _conv_forward_batch(x[None], kernels, biases)[0]


def maxpool_forward(x) -> tuple[np.ndarray, np.ndarray]:
    """Non-overlapping 2x1 max pooling of one [maps, h, w] input.

    Returns the pooled maps and the within-pair argmax (0 = upper row) used
    to route gradients; a trailing odd row is dropped.
    """
    x = np.asarray(x, dtype=np.float64)
    if x.ndim != 3:
        raise ShapeError(f"expected [maps, h, w] input, got rank {x.ndim}")
    out, arg = _maxpool_forward_batch(x[None])
    return out[0], arg[0]


def _check_window(config: NetworkConfig, window: np.ndarray) -> np.ndarray:
    window = np.asarray(window, dtype=np.float64)
    if window.shape != (config.input_h, config.input_w):
        raise ShapeError(
            f"window shape {window.shape} does not match network input "
            f"{(config.input_h, config.input_w)}"
        )
    return window


def forward_with_taps(params: NetworkParams, config: NetworkConfig, window) -> ForwardTrace:
    """Forward one window, recording every layer output and pool tap."""
    window = _check_window(config, window)
    cur = window[None, None, :, :]
    outputs: list[np.ndarray] = []
    taps: list[np.ndarray] = []
    ci = 0
    logits = None
    for spec in config.layers:
        if spec.kind == "conv":
            cur = np.maximum(
                _conv_forward_batch(cur, params.conv_kernels[ci], params.conv_biases[ci]), 0.0
            )
            ci += 1
        elif spec.kind == "maxpool":
            cur, _ = _maxpool_forward_batch(cur)
            taps.append(cur[0].reshape(-1).copy())  # (map, row, column) order
        elif spec.kind == "flatten":
            cur = cur.reshape(1, -1)
        elif spec.kind == "dense":
            cur = cur @ params.dense_weights + params.dense_bias
            logits = cur[0].copy()
        elif spec.kind == "softmax":
            cur = _softmax_rows(cur)
        outputs.append(cur[0].copy())
    return ForwardTrace(layer_outputs=tuple(outputs), pool_taps=tuple(taps), logits=logits)


def predict(params: NetworkParams, config: NetworkConfig, window) -> int:
    """Class index with the largest logit; ties go to the lowest index."""
    window = _check_window(config, window)
    logits, _, _, _ = _forward_batch(params, config, window[None, None, :, :])
    return int(np.argmax(logits[0]))


def predict_dataset(params: NetworkParams, config: NetworkConfig, dataset: Dataset) -> np.ndarray:
    """Vectorized predict over a whole dataset."""
    if len(dataset) == 0:
        raise InputError("dataset is empty")
    logits, _, _, _ = _forward_batch(params, config, dataset.stacked()[:, None, :, :])
    return np.argmax(logits, axis=1)


def _macro_recall(y_true: np.ndarray, y_pred: np.ndarray, n_classes: int) -> float:
    recalls = []
    for c in range(n_classes):
        mask = y_true == c
        if mask.any():
            recalls.append(float((y_pred[mask] == c).mean()))
    return float(np.mean(recalls)) if recalls else 0.0


def train_arrays(
    config: NetworkConfig,
    x: np.ndarray,
    labels: np.ndarray,
    hyper: TrainingConfig = TrainingConfig(),
    log_stream=None,
) -> NetworkParams:
    """Mini-batch SGD with momentum on softmax cross-entropy.

    x is [n, 1, h, w]; labels are class indices. Deterministic for a fixed
    seed: weight init uses hyper.seed, epoch shuffling uses hyper.seed + 1.
    Logs one `epoch,loss,train_recall` line per epoch when log_stream is
    given (recall is the running macro recall over that epoch's batches).
    """
    n = x.shape[0]
    if n == 0:
        raise InputError("training needs at least one window")
    k = config.n_classes
    params = init_params(config, hyper.seed)
    shuffle_rng = np.random.default_rng(hyper.seed + 1)

    vel_k = [np.zeros_like(a) for a in params.conv_kernels]
    vel_kb = [np.zeros_like(a) for a in params.conv_biases]
    vel_w = np.zeros_like(params.dense_weights)
    vel_b = np.zeros_like(params.dense_bias)
    lr, mom = hyper.learning_rate, hyper.momentum

    for epoch in range(1, hyper.epochs + 1):
        order = shuffle_rng.permutation(n)
        loss_sum = 0.0
        preds = np.empty(n, dtype=np.int64)
        for start in range(0, n, hyper.batch_size):
            idx = order[start : start + hyper.batch_size]
            xb, yb = x[idx], labels[idx]
            logits, probs, _, cache = _forward_batch(params, config, xb, keep_cache=True)
            shifted = logits - logits.max(axis=1, keepdims=True)
            log_probs = shifted - np.log(np.exp(shifted).sum(axis=1, keepdims=True))
            batch_loss = -log_probs[np.arange(len(idx)), yb].sum()
            if not np.isfinite(batch_loss):
                raise TrainingDivergedError(f"loss became non-finite in epoch {epoch}")
            loss_sum += float(batch_loss)
            preds[idx] = np.argmax(logits, axis=1)

            grad_logits = probs.copy()
            grad_logits[np.arange(len(idx)), yb] -= 1.0
            grad_logits /= len(idx)
            gks, gbs, gw, gb = _backward_batch(params, grad_logits, cache)

            for i, gk in enumerate(gks):
                vel_k[i] = mom * vel_k[i] - lr * gk
                params.conv_kernels[i] = params.conv_kernels[i] + vel_k[i]
                vel_kb[i] = mom * vel_kb[i] - lr * gbs[i]
                params.conv_biases[i] = params.conv_biases[i] + vel_kb[i]
            vel_w = mom * vel_w - lr * gw
            params.dense_weights = params.dense_weights + vel_w
            vel_b = mom * vel_b - lr * gb
            params.dense_bias = params.dense_bias + vel_b

        if log_stream is not None:
            recall = _macro_recall(labels, preds, k)
            log_stream.write(f"{epoch},{loss_sum / n:.6f},{recall:.6f}\n")
    return params


def train(
    config: NetworkConfig,
    dataset: Dataset,
    hyper: TrainingConfig = TrainingConfig(),
    log_stream=None,
) -> NetworkParams:
    """Train on a segmented dataset; see train_arrays."""
    if len(dataset) == 0:
        raise InputError("dataset is empty")
    if dataset.window_len != config.input_h or dataset.channels != config.input_w:
        raise ShapeError(
            f"dataset windows are {dataset.window_len}x{dataset.channels} but the "
            f"network expects {config.input_h}x{config.input_w}"
        )
    x = dataset.stacked()[:, None, :, :]
    return train_arrays(config, x, dataset.labels(), hyper, log_stream)


def _loss_single(params, config, x, label: int) -> float:
    logits, _, _, _ = _forward_batch(params, config, x)
    shifted = logits[0] - logits[0].max()
    return float(np.log(np.exp(shifted).sum()) - shifted[label])


def grad_check(config: NetworkConfig, window, label: int = 0, seed: int = 0) -> float:
    """Max relative error between analytic and finite-difference gradients.

    Central differences with step 1e-5 over every parameter of a freshly
    initialized network; intended for small networks (<= 1e4 parameters).
    """
    window = _check_window(config, window)
    params = init_params(config, seed)
    x = window[None, None, :, :]

    logits, probs, _, cache = _forward_batch(params, config, x, keep_cache=True)
    grad_logits = probs.copy()
    grad_logits[0, label] -= 1.0
    gks, gbs, gw, gb = _backward_batch(params, grad_logits, cache)

    arrays = list(params.conv_kernels) + list(params.conv_biases)
    arrays += [params.dense_weights, params.dense_bias]
    grads = list(gks) + list(gbs) + [gw, gb]

    h = 1e-5
    worst = 0.0
    for arr, grad in zip(arrays, grads):
        flat = arr.reshape(-1)
        gflat = grad.reshape(-1)
        for i in range(flat.size):
            orig = flat[i]
            flat[i] = orig + h
            up = _loss_single(params, config, x, label)
            flat[i] = orig - h
            down = _loss_single(params, config, x, label)
            flat[i] = orig
            numeric = (up - down) / (2.0 * h)
            denom = max(abs(gflat[i]), abs(numeric), 1e-6)
            worst = max(worst, abs(gflat[i] - numeric) / denom)
    return worst


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _config_payload(config: NetworkConfig) -> dict:
    return {
        "name": config.name,
        "input_h": config.input_h,
        "input_w": config.input_w,
        "layers": [
            {
                "kind": s.kind,
                "filters": s.filters,
                "kernel_h": s.kernel_h,
                "kernel_w": s.kernel_w,
                "pool_h": s.pool_h,
                "pool_w": s.pool_w,
                "units": s.units,
            }
            for s in config.layers
        ],
    }


def _config_from_payload(payload: dict) -> NetworkConfig:
    layers = tuple(LayerSpec(**entry) for entry in payload["layers"])
    return NetworkConfig(
        name=payload["name"],
        layers=layers,
        input_h=int(payload["input_h"]),
        input_w=int(payload["input_w"]),
    )


def config_digest(config: NetworkConfig) -> str:
    """Stable hash of the architecture, used to pair model files."""
    import hashlib

    blob = json.dumps(_config_payload(config), sort_keys=True).encode()
    return hashlib.sha256(blob).hexdigest()


def save_params(params: NetworkParams, config: NetworkConfig, path) -> None:
    from .fileio import atomic_write_text

    payload = {
        "format": PARAMS_FORMAT,
        "version": PARAMS_VERSION,
        "config": _config_payload(config),
        "conv_kernels": [
            {"shape": list(k.shape), "data": k.reshape(-1).tolist()}
            for k in params.conv_kernels
        ],
        "conv_biases": [k.tolist() for k in params.conv_biases],
        "dense_weights": {
            "shape": list(params.dense_weights.shape),
            "data": params.dense_weights.reshape(-1).tolist(),
        },
        "dense_bias": params.dense_bias.tolist(),
    }
    atomic_write_text(path, json.dumps(payload))


def load_params(path) -> tuple[NetworkParams, NetworkConfig]:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at offset {exc.pos}: {exc.msg}") from None
    if not isinstance(payload, dict) or payload.get("format") != PARAMS_FORMAT:
        raise FormatError(f"{path}: not a {PARAMS_FORMAT} file")
    if payload.get("version") != PARAMS_VERSION:
        raise UnsupportedVersionError(
            f"{path}: version {payload.get('version')!r} is not supported "
            f"(this build reads version {PARAMS_VERSION})"
        )
    try:
        config = _config_from_payload(payload["config"])
        kernels = [
            np.array(e["data"], dtype=np.float64).reshape(e["shape"])
            for e in payload["conv_kernels"]
        ]
        biases = [np.array(e, dtype=np.float64) for e in payload["conv_biases"]]
        dw = payload["dense_weights"]
        dense_w = np.array(dw["data"], dtype=np.float64).reshape(dw["shape"])
        dense_b = np.array(payload["dense_bias"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed field: {exc}") from None
    params = NetworkParams(
        conv_kernels=kernels, conv_biases=biases, dense_weights=dense_w, dense_bias=dense_b
    )
    return params, config


def params_digest(params: NetworkParams) -> str:
    """Hash of all parameter bytes; used to assert the freezing contract."""
    import hashlib

    h = hashlib.sha256()
    for arr in params.conv_kernels + params.conv_biases:
        h.update(np.ascontiguousarray(arr).tobytes())
    h.update(np.ascontiguousarray(params.dense_weights).tobytes())
    h.update(np.ascontiguousarray(params.dense_bias).tobytes())
    return h.hexdigest()
