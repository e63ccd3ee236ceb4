"""Supervised dimensionality reduction by partial least squares.

Weight columns are extracted one at a time: an iterative power-style loop
alternates between feature weights and class weights until the feature
weight vector stops moving, then the extracted rank-1 component is deflated
out of both blocks and the next column is computed. Features are z-scored
and the class-indicator block is centered before extraction, so projections
of differently scaled feature blocks live on a common scale.

Two deflation variants are available:

* ``normalized`` (default): loadings are scaled by the squared score norm,
  ``p = X^T t / (t^T t)``, which keeps successive score vectors orthogonal.
* ``literal``: unscaled loadings ``p = X^T t``. Only sensible when scores
  are close to unit norm; kept selectable for comparison runs.
"""
from __future__ import annotations

import json
import warnings
from dataclasses import dataclass

import numpy as np

from . import tensors
from .errors import (
    FormatError,
    InputError,
    NumericError,
    ParameterError,
    ShapeError,
    UnsupportedVersionError,
)

MODEL_FORMAT = "pls-model"
MODEL_VERSION = 1

DEFAULT_EPSILON = 1e-8
DEFAULT_TOL = 1e-8
DEFAULT_MAX_ITERS = 20

# Deterministic stand-in for a random score initialization, used only when
# the first indicator column is identically zero.
_FALLBACK_SEED = 20508


@dataclass(frozen=True)
class Standardizer:
    """Per-column z-score parameters; stds are clamped from below."""

    means: np.ndarray
    stds: np.ndarray
    epsilon: float = DEFAULT_EPSILON


@dataclass(frozen=True)
class PlsModel:
    """Projection weights plus the standardizer they were fitted behind.

    weights has unit-norm columns; transforming standardizes the input and
    multiplies by weights.
    """

    weights: np.ndarray  # [n_features, components]
    components: int
    x_standardizer: Standardizer
    n_features: int
    n_classes: int


@dataclass(frozen=True)
class NipalsTrace:
    """Per-component quantities captured while fitting.

    x_residual_norms holds the Frobenius norm of the deflated feature block,
    starting with the undeflated block (components + 1 entries).
    """

    x_weights: np.ndarray  # [n_features, components]
    x_scores: np.ndarray  # [n_samples, components]
    y_weights: np.ndarray  # [n_classes, components]
    x_loadings: np.ndarray  # [n_features, components]
    x_residual_norms: np.ndarray  # [components + 1]


def one_hot(labels, n_classes: int) -> np.ndarray:
    """Indicator matrix: row i is 1 at column labels[i], 0 elsewhere."""
    labels = np.asarray(labels, dtype=np.int64)
    if labels.ndim != 1:
        raise ShapeError("labels must be a flat sequence")
    if labels.size and (labels.min() < 0 or labels.max() >= n_classes):
        raise ParameterError(
            f"labels must lie in [0, {n_classes}), got range "
            f"[{labels.min()}, {labels.max()}]"
        )
    out = np.zeros((labels.size, n_classes), dtype=np.float64)
    out[np.arange(labels.size), labels] = 1.0
    return out


def standardize_fit(X, epsilon: float = DEFAULT_EPSILON) -> Standardizer:
    """Fit per-column mean and population standard deviation.

    Columns with standard deviation below epsilon are clamped to epsilon so
    constant features map to zero instead of NaN.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ShapeError(f"expected a matrix, got rank {X.ndim}")
    if X.shape[0] < 2:
        raise InputError("standardization needs at least 2 rows")
    means = X.mean(axis=0)
    stds = X.std(axis=0)
    stds = np.where(stds < epsilon, epsilon, stds)
    return Standardizer(means=means, stds=stds, epsilon=epsilon)


def standardize_apply(s: Standardizer, X) -> np.ndarray:
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != s.means.shape[0]:
        raise ShapeError(
            f"expected [n x {s.means.shape[0]}] input, got {X.shape}"
        )
    return (X - s.means) / s.stds


def nipals_fit_trace(
    X,
    Y,
    components: int,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    deflation: str = "normalized",
) -> tuple[PlsModel, NipalsTrace]:
    """Fit a projection and also return the per-component fitting trace.

    Parameters
    ----------
    X : [n, m] raw feature matrix (standardized internally).
    Y : [n, k] class-indicator (or response) matrix, centered internally.
    components : requested number of weight columns; silently clamped to
        min(m, n - 1) with a warning when too large.
    tol : inner-loop stop threshold on max|w_new - w_old|.
    max_iters : inner-loop iteration cap.
    deflation : "normalized" or "literal", see module docstring.
    """
    X = np.asarray(X, dtype=np.float64)
    Y = np.asarray(Y, dtype=np.float64)
    if X.ndim != 2 or Y.ndim != 2:
        raise ShapeError("X and Y must be matrices")
    if X.shape[0] != Y.shape[0]:
        raise ShapeError(f"row counts disagree: X has {X.shape[0]}, Y has {Y.shape[0]}")
    if not np.isfinite(X).all() or not np.isfinite(Y).all():
        raise NumericError("X and Y must be finite")
    if deflation not in ("normalized", "literal"):
        raise ParameterError(f"unknown deflation variant {deflation!r}")
    if components < 1:
        raise ParameterError("components must be >= 1")

    n, m = X.shape
    k = Y.shape[1]
    limit = min(m, n - 1)
    if components > limit:
        warnings.warn(
            f"requested {components} components but only {limit} are "
            f"extractable from a {n} x {m} block; clamping",
            stacklevel=2,
        )
        components = limit

    standardizer = standardize_fit(X)
    Xd = standardize_apply(standardizer, X)
    Yd = Y - Y.mean(axis=0)

    W = np.empty((m, components))
    T = np.empty((n, components))
    Q = np.empty((k, components))
    P = np.empty((m, components))
    residual_norms = [float(np.linalg.norm(Xd))]

    for a in range(components):
        u = Yd[:, 0].copy()
        if not u.any():
            u = np.random.default_rng(_FALLBACK_SEED).standard_normal(n)

        w_prev = None
        for _ in range(max_iters):
            xu = Xd.T @ u
            xu_norm = np.linalg.norm(xu)
            if xu_norm == 0.0:
                raise NumericError(
                    f"component {a + 1}: feature block carries no signal left"
                )
            w = xu / xu_norm
            t = Xd @ w
            yt = Yd.T @ t
            yt_norm = np.linalg.norm(yt)
            if yt_norm == 0.0:
                raise NumericError(
                    f"component {a + 1}: indicator block carries no signal left"
                )
            q = yt / yt_norm
            u = Yd @ q
            if w_prev is not None and np.max(np.abs(w - w_prev)) < tol:
                break
            w_prev = w

        tt = float(t @ t)
        if tt == 0.0:
            raise NumericError(f"component {a + 1}: zero score vector")
        if deflation == "normalized":
            p = Xd.T @ t / tt
            y_loading = Yd.T @ t / tt
        else:
            p = Xd.T @ t
            y_loading = q
        Xd = Xd - np.outer(t, p)
        Yd = Yd - np.outer(t, y_loading)

        W[:, a] = w
        T[:, a] = t
        Q[:, a] = q
        P[:, a] = p
        residual_norms.append(float(np.linalg.norm(Xd)))

    model = PlsModel(
        weights=W,
        components=components,
        x_standardizer=standardizer,
        n_features=m,
        n_classes=k,
    )
    trace = NipalsTrace(
        x_weights=W.copy(),
        x_scores=T,
        y_weights=Q,
        x_loadings=P,
        x_residual_norms=np.array(residual_norms),
    )
    return model, trace


def nipals_fit(
    X,
    Y,
    components: int,
    tol: float = DEFAULT_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    deflation: str = "normalized",
) -> PlsModel:
    """Fit a projection; see nipals_fit_trace for parameters."""
    model, _ = nipals_fit_trace(X, Y, components, tol, max_iters, deflation)
    return model


def pls_transform(model: PlsModel, X) -> np.ndarray:
    """Project raw features: standardize, then multiply by the weights."""
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2 or X.shape[1] != model.n_features:
        raise ShapeError(
            f"expected [n x {model.n_features}] input, got {X.shape}"
        )
    Z = standardize_apply(model.x_standardizer, X)
    return tensors.matmul(Z, model.weights)


def model_payload(model: PlsModel) -> dict:
    """JSON-ready representation; floats round-trip bit-exactly via repr."""
    return {
        "format": MODEL_FORMAT,
        "version": MODEL_VERSION,
        "n_features": model.n_features,
        "n_classes": model.n_classes,
        "components": model.components,
        "epsilon": model.x_standardizer.epsilon,
        "means": model.x_standardizer.means.tolist(),
        "stds": model.x_standardizer.stds.tolist(),
        "weights": model.weights.reshape(-1).tolist(),  # row-major
    }


def model_from_payload(payload: dict, source: str = "<payload>") -> PlsModel:
    if not isinstance(payload, dict):
        raise FormatError(f"{source}: expected a JSON object at the top level")
    if payload.get("format") != MODEL_FORMAT:
        raise FormatError(f"{source}: not a {MODEL_FORMAT} file")
    if payload.get("version") != MODEL_VERSION:
        raise UnsupportedVersionError(
            f"{source}: version {payload.get('version')!r} is not supported "
            f"(this build reads version {MODEL_VERSION})"
        )
    try:
        m = int(payload["n_features"])
        k = int(payload["n_classes"])
        c = int(payload["components"])
        epsilon = float(payload["epsilon"])
        means = np.array(payload["means"], dtype=np.float64)
        stds = np.array(payload["stds"], dtype=np.float64)
        weights = np.array(payload["weights"], dtype=np.float64)
    except (KeyError, TypeError, ValueError) as exc:
        raise FormatError(f"{source}: malformed field: {exc}") from None
    if means.shape != (m,) or stds.shape != (m,) or weights.size != m * c:
        raise FormatError(f"{source}: field lengths disagree with declared sizes")
    return PlsModel(
        weights=weights.reshape(m, c),
        components=c,
        x_standardizer=Standardizer(means=means, stds=stds, epsilon=epsilon),
        n_features=m,
        n_classes=k,
    )


def save_model(model: PlsModel, path) -> None:
    from .fileio import atomic_write_text

    atomic_write_text(path, json.dumps(model_payload(model)))


def load_model(path) -> PlsModel:
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        payload = json.loads(text)
    except json.JSONDecodeError as exc:
        raise FormatError(f"{path}: invalid JSON at offset {exc.pos}: {exc.msg}") from None
    return model_from_payload(payload, source=str(path))
