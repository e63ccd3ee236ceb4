"""Latent hypernet: per-pool-layer latent projections over a frozen network.

Every max-pooling stage of a trained network gets its own supervised
projection, fitted on that stage's flattened feature maps and the class
indicators. The per-stage latent features are concatenated in layer order
and a fresh fully connected + softmax classifier is trained on them. The
network's weights are read, never written.

Fitting one projection per stage (instead of one over the concatenated
maps) keeps each fit small; a `reduce=False` switch skips the projections
entirely and feeds z-scored raw taps to the classifier, for measuring what
the reduction step contributes.
"""
from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass

import numpy as np

from . import convnet, pls
from .convnet import NetworkConfig, NetworkParams, TrainingConfig
from .errors import (
    DegenerateClassError,
    FormatError,
    InputError,
    ParameterError,
    ShapeError,
    UnsupportedVersionError,
)
from .ingest import Dataset

MODEL_FORMAT = "lhn-model"
MODEL_VERSION = 1

DEFAULT_COMPONENTS = 19

_COLLECT_CHUNK = 256


@dataclass
class LhnModel:
    """Per-pool-layer projections plus the latent classifier.

    pls_models is empty when the model was fitted with reduce=False; the
    tap_standardizers then z-score the raw taps instead.
    """

    pls_models: list[pls.PlsModel]
    tap_standardizers: list[pls.Standardizer]
    classifier_weights: np.ndarray  # [latent_width, n_classes]
    classifier_bias: np.ndarray  # [n_classes]
    components: int  # requested per-layer width
    layer_components: list[int]  # effective width per pool layer
    config_name: str
    config_digest: str

    @property
    def reduced(self) -> bool:
        return bool(self.pls_models)

    @property
    def pool_layer_count(self) -> int:
        return len(self.layer_components)

    @property
    def latent_width(self) -> int:
        return int(sum(self.layer_components))


def collect_pool_features(
    params: NetworkParams, config: NetworkConfig, dataset: Dataset
) -> list[np.ndarray]:
    """One matrix per pool layer; row j is window j's flattened pool output.

    Flattening is row-major over (map, row, column). The network parameters
    are only read.
    """
    if len(dataset) == 0:
        raise InputError("dataset is empty")
    if dataset.window_len != config.input_h or dataset.channels != config.input_w:
        raise ShapeError(
            f"dataset windows are {dataset.window_len}x{dataset.channels} but the "
            f"network expects {config.input_h}x{config.input_w}"
        )
    x = dataset.stacked()[:, None, :, :]
    chunks: list[list[np.ndarray]] = []
    for start in range(0, x.shape[0], _COLLECT_CHUNK):
        _, _, pools, _ = convnet._forward_batch(
            params, config, x[start : start + _COLLECT_CHUNK], keep_pools=True
        )
        chunks.append([p.reshape(p.shape[0], -1) for p in pools])
    n_layers = len(chunks[0])
    return [np.concatenate([c[i] for c in chunks], axis=0) for i in range(n_layers)]


def lhn_fit(
    params: NetworkParams,
    config: NetworkConfig,
    dataset: Dataset,
    components: int = DEFAULT_COMPONENTS,
    classifier: TrainingConfig = TrainingConfig(),
    reduce: bool = True,
) -> LhnModel:
    """Fit the per-layer projections and train the latent classifier.

    Each pool layer's projection is fitted independently on that layer's
    taps and the one-hot labels; requested widths wider than a layer
    supports are clamped (with a warning) by the projection fit.
    """
    if components < 1:
        raise ParameterError("components must be >= 1")
    labels = dataset.labels()
    k = dataset.n_classes
    if len(np.unique(labels)) < 2:
        raise DegenerateClassError("need windows from at least 2 classes")

    taps = collect_pool_features(params, config, dataset)
    indicators = pls.one_hot(labels, k)

    models: list[pls.PlsModel] = []
    standardizers: list[pls.Standardizer] = []
    latents: list[np.ndarray] = []
    if reduce:
        for tap in taps:
            model = pls.nipals_fit(tap, indicators, components)
            models.append(model)
            latents.append(pls.pls_transform(model, tap))
        layer_components = [m.components for m in models]
    else:
        for tap in taps:
            s = pls.standardize_fit(tap)
            standardizers.append(s)
            latents.append(pls.standardize_apply(s, tap))
        layer_components = [t.shape[1] for t in taps]

    latent = np.concatenate(latents, axis=1)
    head_config = NetworkConfig(
        name="latent-classifier",
        layers=(convnet.flatten(), convnet.dense(k), convnet.softmax()),
        input_h=latent.shape[1],
        input_w=1,
    )
    head = convnet.train_arrays(
        head_config, latent[:, None, :, None], labels, classifier
    )
    return LhnModel(
        pls_models=models,
        tap_standardizers=standardizers,
        classifier_weights=head.dense_weights,
        classifier_bias=head.dense_bias,
        components=components,
        layer_components=layer_components,
        config_name=config.name,
        config_digest=convnet.config_digest(config),
    )


def _project_taps(model: LhnModel, taps: list[np.ndarray]) -> np.ndarray:
    if len(taps) != model.pool_layer_count:
        raise ShapeError(
            f"network exposes {len(taps)} pool layers, model was fitted on "
            f"{model.pool_layer_count}"
        )
    if model.reduced:
        parts = [pls.pls_transform(m, t) for m, t in zip(model.pls_models, taps)]
    else:
        parts = [pls.standardize_apply(s, t) for s, t in zip(model.tap_standardizers, taps)]
    return np.concatenate(parts, axis=1)


def lhn_transform(
    model: LhnModel, params: NetworkParams, config: NetworkConfig, window
) -> np.ndarray:
    """Latent feature vector of one window: per-layer projections, in order."""
    trace = convnet.forward_with_taps(params, config, window)
    return _project_taps(model, [t[None, :] for t in trace.pool_taps])[0]


def lhn_predict(
    model: LhnModel, params: NetworkParams, config: NetworkConfig, window
) -> int:
    """Classifier argmax over the latent features; ties go to the lowest index."""
    z = lhn_transform(model, params, config, window)
    logits = z @ model.classifier_weights + model.classifier_bias
    return int(np.argmax(logits))


def lhn_predict_dataset(
    model: LhnModel, params: NetworkParams, config: NetworkConfig, dataset: Dataset
) -> np.ndarray:
    """Vectorized lhn_predict over a whole dataset."""
    taps = collect_pool_features(params, config, dataset)
    latent = _project_taps(model, taps)
    logits = latent @ model.classifier_weights + model.classifier_bias
    return np.argmax(logits, axis=1)


def export_projection(
    model: LhnModel,
    params: NetworkParams,
    config: NetworkConfig,
    dataset: Dataset,
    layer_selector: str = "last",
    out_path=None,
) -> list[tuple[float, float, str]]:
    """Two-component scatter of the dataset for plotting.

    `last` projects the final pool layer's taps with its fitted model and
    takes components 1 and 2; `all` fits a fresh two-component projection
    on the concatenation of every layer's taps. Rows are (comp1, comp2,
    class name); written as CSV when out_path is given.
    """
    if layer_selector not in ("last", "all"):
        raise ParameterError(f"layer_selector must be 'last' or 'all', got {layer_selector!r}")
    if model.components < 2:
        raise ParameterError("projection export needs a model fitted with components >= 2")
    taps = collect_pool_features(params, config, dataset)
    if layer_selector == "last":
        if not model.reduced:
            raise ParameterError("projection export needs a model fitted with reduce=True")
        if model.layer_components[-1] < 2:
            raise ParameterError(
                "last pool layer was clamped below 2 components; cannot export"
            )
        coords = pls.pls_transform(model.pls_models[-1], taps[-1])[:, :2]
    else:
        combined = np.concatenate(taps, axis=1)
        indicators = pls.one_hot(dataset.labels(), dataset.n_classes)
        fresh = pls.nipals_fit(combined, indicators, 2)
        coords = pls.pls_transform(fresh, combined)

    names = dataset.class_names
    rows = [
        (float(c1), float(c2), names[w.label])
        for (c1, c2), w in zip(coords, dataset.windows)
    ]
    if out_path is not None:
        from .fileio import atomic_write_text

        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["comp1", "comp2", "label"])
        for c1, c2, name in rows:
            writer.writerow([repr(c1), repr(c2), name])
        atomic_write_text(out_path, buf.getvalue())
    return rows


# ---------------------------------------------------------------------------
# persistence
# ---------------------------------------------------------------------------


def _standardizer_payload(s: pls.Standardizer) -> dict:
    return {"means": s.means.tolist(), "stds": s.stds.tolist(), "epsilon": s.epsilon}


def _standardizer_from_payload(entry: dict) -> pls.Standardizer:
    return pls.Standardizer(
        means=np.array(entry["means"], dtype=np.float64),
        stds=np.array(entry["stds"], dtype=np.float64),
        epsilon=float(entry["epsilon"]),
    )


def save_lhn(model: LhnModel, path) -> None:
    from .fileio import atomic_write_text

    payload = {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "config_name": model.config_name,
        "config_digest": model.config_digest,
        "components": model.components,
        "layer_components": list(model.layer_components),
        "pls_models": [pls.model_payload(m) for m in model.pls_models],
        "tap_standardizers": [_standardizer_payload(s) for s in model.tap_standardizers],
        "classifier_weights": {
            "shape": list(model.classifier_weights.shape),
            "data": model.classifier_weights.reshape(-1).tolist(),
        },
        "classifier_bias": model.classifier_bias.tolist(),
    }
    atomic_write_text(path, json.dumps(payload))


def load_lhn(path) -> LhnModel:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at offset {exc.pos}: {exc.msg}") from None
    if not isinstance(payload, dict) or payload.get("format") != MODEL_FORMAT:
        raise FormatError(f"{path}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise UnsupportedVersionError(
            f"{path}: version {payload.get('version')!r} is not supported "
            f"(this build reads version {MODEL_VERSION})"
        )
    try:
        cw = payload["classifier_weights"]
        model = LhnModel(
            pls_models=[
                pls.model_from_payload(p, source=str(path)) for p in payload["pls_models"]
            ],
            tap_standardizers=[
                _standardizer_from_payload(e) for e in payload["tap_standardizers"]
            ],
            classifier_weights=np.array(cw["data"], dtype=np.float64).reshape(cw["shape"]),
            classifier_bias=np.array(payload["classifier_bias"], dtype=np.float64),
            components=int(payload["components"]),
            layer_components=[int(v) for v in payload["layer_components"]],
            config_name=payload["config_name"],
            config_digest=payload["config_digest"],
        )
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{path}: malformed field: {exc}") from None
    return model
