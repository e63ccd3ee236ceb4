import collections
import json

import numpy as np
import pytest

from latenthypernet import convnet, lhn, pls, synthetic
from latenthypernet.convnet import TrainingConfig
from latenthypernet.errors import (
    DegenerateClassError,
    FormatError,
    ParameterError,
    ShapeError,
    UnsupportedVersionError,
)


@pytest.fixture(scope="module")
def trained():
    """Small trained net on synthetic data, shared by the module's tests."""
    ds = synthetic.make_synthetic_dataset(n_windows=160, window_len=48, seed=3)
    cfg = convnet.preset("convnet1", ds.window_len, ds.channels, ds.n_classes)
    params = convnet.train(cfg, ds, TrainingConfig(epochs=10, seed=0))
    return ds, cfg, params


def test_collect_pool_features_shapes(trained):
    ds, cfg, params = trained
    taps = lhn.collect_pool_features(params, cfg, ds)
    assert len(taps) == 2
    shapes = convnet.propagate_shapes(cfg)
    pool_shapes = [s for s, spec in zip(shapes, cfg.layers) if spec.kind == "maxpool"]
    for tap, shape in zip(taps, pool_shapes):
        assert tap.shape == (len(ds), int(np.prod(shape)))


def test_tap_flattening_is_map_row_column(trained):
    ds, cfg, params = trained
    trace = convnet.forward_with_taps(params, cfg, ds.windows[0].values)
    pooled = None
    cur = ds.windows[0].values[None, None, :, :]
    ci = 0
    for spec in cfg.layers:
        if spec.kind == "conv":
            cur = np.maximum(
                convnet._conv_forward_batch(cur, params.conv_kernels[ci], params.conv_biases[ci]),
                0.0,
            )
            ci += 1
        elif spec.kind == "maxpool":
            cur, _ = convnet._maxpool_forward_batch(cur)
            pooled = cur[0]
            break
    assert np.array_equal(trace.pool_taps[0], pooled.reshape(-1))


def test_latent_width_small(trained):
    ds, cfg, params = trained
    model = lhn.lhn_fit(params, cfg, ds, components=1, classifier=TrainingConfig(epochs=1))
    assert model.latent_width == 2
    assert model.layer_components == [1, 1]
    assert model.classifier_weights.shape == (2, ds.n_classes)


def test_freezing_contract(trained):
    ds, cfg, params = trained
    before = convnet.params_digest(params)
    lhn.lhn_fit(params, cfg, ds, components=3, classifier=TrainingConfig(epochs=2))
    assert convnet.params_digest(params) == before


def test_idempotent_fit(trained):
    ds, cfg, params = trained
    a = lhn.lhn_fit(params, cfg, ds, components=3, classifier=TrainingConfig(epochs=2))
    b = lhn.lhn_fit(params, cfg, ds, components=3, classifier=TrainingConfig(epochs=2))
    assert np.array_equal(a.classifier_weights, b.classifier_weights)
    for ma, mb in zip(a.pls_models, b.pls_models):
        assert np.array_equal(ma.weights, mb.weights)


def test_per_layer_fit_matches_direct_fit(trained):
    ds, cfg, params = trained
    model = lhn.lhn_fit(params, cfg, ds, components=3, classifier=TrainingConfig(epochs=1))
    taps = lhn.collect_pool_features(params, cfg, ds)
    indicators = pls.one_hot(ds.labels(), ds.n_classes)
    for tap, fitted in zip(taps, model.pls_models):
        direct = pls.nipals_fit(tap, indicators, 3)
        assert np.array_equal(direct.weights, fitted.weights)


def test_transform_matches_training_latent_row(trained):
    ds, cfg, params = trained
    model = lhn.lhn_fit(params, cfg, ds, components=4, classifier=TrainingConfig(epochs=1))
    taps = lhn.collect_pool_features(params, cfg, ds)
    latent = np.concatenate(
        [pls.pls_transform(m, t) for m, t in zip(model.pls_models, taps)], axis=1
    )
    for j in (0, 17, len(ds) - 1):
        z = lhn.lhn_transform(model, params, cfg, ds.windows[j].values)
        assert np.abs(z - latent[j]).max() <= 1e-10


def test_layer_order_in_latent_vector(trained):
    ds, cfg, params = trained
    model = lhn.lhn_fit(params, cfg, ds, components=2, classifier=TrainingConfig(epochs=1))
    trace = convnet.forward_with_taps(params, cfg, ds.windows[5].values)
    z = lhn.lhn_transform(model, params, cfg, ds.windows[5].values)
    first = pls.pls_transform(model.pls_models[0], trace.pool_taps[0][None, :])[0]
    assert np.array_equal(z[:2], first)


def test_predict_deterministic_and_shift_invariant(trained):
    ds, cfg, params = trained
    model = lhn.lhn_fit(params, cfg, ds, components=3, classifier=TrainingConfig(epochs=3))
    w = ds.windows[9].values
    first = lhn.lhn_predict(model, params, cfg, w)
    assert all(lhn.lhn_predict(model, params, cfg, w) == first for _ in range(3))
    model.classifier_bias = model.classifier_bias + 7.5  # uniform logit shift
    assert lhn.lhn_predict(model, params, cfg, w) == first


def test_component_clamp_propagates(trained):
    ds, cfg, params = trained
    small = synthetic.make_synthetic_dataset(n_windows=12, window_len=48, seed=4)
    with pytest.warns(UserWarning, match="clamping"):
        model = lhn.lhn_fit(params, cfg, small, components=19, classifier=TrainingConfig(epochs=1))
    assert model.layer_components == [11, 11]  # n - 1
    assert model.latent_width == 22


def test_requires_two_classes(trained):
    ds, cfg, params = trained
    only = [w for w in ds.windows if w.label == 0]
    single = type(ds)(windows=tuple(only), class_names=ds.class_names, channels=ds.channels)
    with pytest.raises(DegenerateClassError):
        lhn.lhn_fit(params, cfg, single, components=2)


def test_no_reduction_ablation(trained):
    ds, cfg, params = trained
    model = lhn.lhn_fit(
        params, cfg, ds, components=19, classifier=TrainingConfig(epochs=2), reduce=False
    )
    taps = lhn.collect_pool_features(params, cfg, ds)
    assert not model.reduced
    assert model.latent_width == sum(t.shape[1] for t in taps)
    pred = lhn.lhn_predict(model, params, cfg, ds.windows[0].values)
    assert 0 <= pred < ds.n_classes


def test_window_shape_mismatch(trained):
    ds, cfg, params = trained
    model = lhn.lhn_fit(params, cfg, ds, components=2, classifier=TrainingConfig(epochs=1))
    with pytest.raises(ShapeError):
        lhn.lhn_transform(model, params, cfg, np.zeros((10, 2)))


def centroid_spread(rows):
    by_label = collections.defaultdict(list)
    for c1, c2, name in rows:
        by_label[name].append((c1, c2))
    centroids = {k: np.mean(v, axis=0) for k, v in by_label.items()}
    names = sorted(centroids)
    dists = [
        np.linalg.norm(centroids[a] - centroids[b])
        for i, a in enumerate(names)
        for b in names[i + 1 :]
    ]
    return float(np.mean(dists))


class TestExportProjection:
    def test_row_count_and_labels(self, trained, tmp_path):
        ds, cfg, params = trained
        model = lhn.lhn_fit(params, cfg, ds, components=3, classifier=TrainingConfig(epochs=1))
        out = tmp_path / "proj.csv"
        rows = lhn.export_projection(model, params, cfg, ds, "last", out)
        assert len(rows) == len(ds)
        text = out.read_text().splitlines()
        assert text[0] == "comp1,comp2,label"
        assert len(text) == len(ds) + 1
        labels_seen = {line.rsplit(",", 1)[1] for line in text[1:]}
        assert labels_seen == set(ds.class_names)

    def test_combined_separates_at_least_as_well(self, trained):
        # multi-scale claim: a projection over all taps should separate the
        # class centroids at least as far apart as the last layer alone
        ds, cfg, params = trained
        model = lhn.lhn_fit(params, cfg, ds, components=3, classifier=TrainingConfig(epochs=1))
        last = lhn.export_projection(model, params, cfg, ds, "last")
        both = lhn.export_projection(model, params, cfg, ds, "all")
        assert centroid_spread(both) >= centroid_spread(last)

    def test_needs_two_components(self, trained):
        ds, cfg, params = trained
        model = lhn.lhn_fit(params, cfg, ds, components=1, classifier=TrainingConfig(epochs=1))
        with pytest.raises(ParameterError):
            lhn.export_projection(model, params, cfg, ds, "last")

    def test_unreduced_model_cannot_export_last(self, trained):
        ds, cfg, params = trained
        model = lhn.lhn_fit(
            params, cfg, ds, components=2, classifier=TrainingConfig(epochs=1), reduce=False
        )
        with pytest.raises(ParameterError):
            lhn.export_projection(model, params, cfg, ds, "last")

    def test_bad_selector(self, trained):
        ds, cfg, params = trained
        model = lhn.lhn_fit(params, cfg, ds, components=2, classifier=TrainingConfig(epochs=1))
        with pytest.raises(ParameterError):
            lhn.export_projection(model, params, cfg, ds, "first")


class TestPersistence:
    def test_round_trip(self, trained, tmp_path):
        ds, cfg, params = trained
        model = lhn.lhn_fit(params, cfg, ds, components=3, classifier=TrainingConfig(epochs=2))
        path = tmp_path / "model.lhn.json"
        lhn.save_lhn(model, path)
        loaded = lhn.load_lhn(path)
        assert np.array_equal(loaded.classifier_weights, model.classifier_weights)
        assert np.array_equal(loaded.classifier_bias, model.classifier_bias)
        assert loaded.layer_components == model.layer_components
        assert loaded.config_digest == model.config_digest
        for ma, mb in zip(loaded.pls_models, model.pls_models):
            assert np.array_equal(ma.weights, mb.weights)
        w = ds.windows[3].values
        assert lhn.lhn_predict(loaded, params, cfg, w) == lhn.lhn_predict(model, params, cfg, w)

    def test_version_mismatch(self, trained, tmp_path):
        ds, cfg, params = trained
        model = lhn.lhn_fit(params, cfg, ds, components=2, classifier=TrainingConfig(epochs=1))
        path = tmp_path / "model.lhn.json"
        lhn.save_lhn(model, path)
        payload = json.loads(path.read_text())
        payload["version"] = 12
        path.write_text(json.dumps(payload), encoding="utf-8")
        with pytest.raises(UnsupportedVersionError):
            lhn.load_lhn(path)

    def test_corrupt(self, tmp_path):
        path = tmp_path / "model.lhn.json"
        path.write_text("][", encoding="utf-8")
        with pytest.raises(FormatError):
            lhn.load_lhn(path)
