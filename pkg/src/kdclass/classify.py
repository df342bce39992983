"""Posterior kernel density classification.

Each class gets its own product-kernel density estimate; a query is assigned
to the class maximizing prior times estimated density. In adaptive mode the
bandwidths are re-selected per query and per class by the shrinking loop, so
every class judges the query through its own locally relevant coordinates.
Fixed mode uses one shared scalar bandwidth and serves as the baseline.

Scores are kept in log space; posteriors are the softmax of the log scores.
Ties break toward the class listed first in the model.
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np

from .bandwidths import LocalBandwidths, ShrinkParams, local_bandwidths
from .data import LabeledDataset
from .density import log_class_density

__all__ = [
    "ClassGroup",
    "FitModel",
    "Prediction",
    "fit",
    "predict",
    "predict_batch",
    "save_model",
    "load_model",
]

_SCHEMA_VERSION = 1


@dataclass
class ClassGroup:
    """Training rows of one class, in first-appearance label order."""

    label: str
    samples: np.ndarray


@dataclass
class FitModel:
    """A fitted classifier: per-class samples, priors, and tuning constants."""

    groups: list[ClassGroup]
    priors: np.ndarray
    params: ShrinkParams
    uniform_priors: bool

    @property
    def labels(self) -> list[str]:
        return [g.label for g in self.groups]

    @property
    def d(self) -> int:
        return self.groups[0].samples.shape[1]

    @property
    def class_sizes(self) -> list[int]:
        return [g.samples.shape[0] for g in self.groups]


@dataclass
class Prediction:
    """Classification of one query point.

    ``log_scores[c]`` is log prior plus log density for class c;
    ``posteriors`` is their softmax; ``bandwidths[c]`` is the per-class
    bandwidth vector the score was computed with (each row constant in
    fixed mode); ``steps[c]`` counts shrinks per coordinate (zeros in fixed
    mode).
    """

    label: str
    log_scores: np.ndarray
    posteriors: np.ndarray
    bandwidths: np.ndarray
    steps: np.ndarray


def fit(
    data: LabeledDataset,
    params: ShrinkParams | None = None,
    uniform_priors: bool = False,
) -> FitModel:
    """Group training data by label and freeze priors.

    Requires at least two classes and at least two rows per class. Class
    order is first appearance in the data; priors are class shares of the
    training set unless ``uniform_priors`` is set.
    """
    if params is None:
        params = ShrinkParams()
    order = data.class_order()
    if len(order) < 2:
        raise ValueError("need at least 2 classes to classify")
    groups = []
    for lab in order:
        rows = data.rows_for(lab)
        if rows.shape[0] < 2:
            raise ValueError(f"class {lab!r} has fewer than 2 training rows")
        groups.append(ClassGroup(label=lab, samples=np.ascontiguousarray(rows)))
    if uniform_priors:
        priors = np.full(len(order), 1.0 / len(order))
    else:
        counts = np.array([g.samples.shape[0] for g in groups], dtype=np.float64)
        priors = counts / counts.sum()
    return FitModel(groups=groups, priors=priors, params=params, uniform_priors=uniform_priors)


def _score_one(x: np.ndarray, model: FitModel, fixed_h: float | None):
    c, d = len(model.groups), model.d
    log_scores = np.empty(c)
    bandwidths = np.empty((c, d))
    steps = np.zeros((c, d), dtype=np.int64)
    for ci, group in enumerate(model.groups):
        if fixed_h is None:
            res: LocalBandwidths = local_bandwidths(x, group.samples, model.params)
            log_density = res.log_density
            bandwidths[ci] = res.h
            steps[ci] = res.steps
        else:
            h = np.full(d, fixed_h)
            log_density = log_class_density(x, group.samples, h)
            bandwidths[ci] = h
        log_scores[ci] = math.log(model.priors[ci]) + log_density
    return log_scores, bandwidths, steps


def predict(
    x,
    model: FitModel,
    mode: str = "adaptive",
    fixed_h: float | None = None,
) -> Prediction:
    """Classify one query point.

    ``mode`` is ``"adaptive"`` (per-query bandwidth selection) or
    ``"fixed"`` (shared scalar bandwidth, ``fixed_h`` required and positive).
    """
    x = np.asarray(x, dtype=np.float64).ravel()
    if x.shape[0] != model.d:
        raise ValueError(f"query has length {x.shape[0]}, model expects d={model.d}")
    if not np.isfinite(x).all():
        raise ValueError("query must be finite")
    if mode == "adaptive":
        h_arg = None
    elif mode == "fixed":
        if fixed_h is None or not (fixed_h > 0 and math.isfinite(fixed_h)):
            raise ValueError("fixed mode needs a positive finite fixed_h")
        h_arg = float(fixed_h)
    else:
        raise ValueError(f"unknown mode {mode!r}")

    log_scores, bandwidths, steps = _score_one(x, model, h_arg)
    shifted = log_scores - log_scores.max()
    weights = np.exp(shifted)
    posteriors = weights / weights.sum()
    label = model.labels[int(np.argmax(log_scores))]
    return Prediction(
        label=label, log_scores=log_scores, posteriors=posteriors,
        bandwidths=bandwidths, steps=steps,
    )


def predict_batch(
    X,
    model: FitModel,
    mode: str = "adaptive",
    fixed_h: float | None = None,
    threads: int | None = None,
) -> list[Prediction]:
    """Classify each row of X; results keep row order regardless of threads.

    ``threads=None`` or 1 stays serial; larger values fan queries out over a
    thread pool. Output is identical either way.
    """
    X = np.asarray(X, dtype=np.float64)
    if X.ndim != 2:
        raise ValueError("X must be an (m, d) matrix")
    rows = [X[i] for i in range(X.shape[0])]
    if threads is None or threads <= 1:
        return [predict(x, model, mode, fixed_h) for x in rows]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(lambda x: predict(x, model, mode, fixed_h), rows))


def _model_to_dict(model: FitModel) -> dict:
    return {
        "schema_version": _SCHEMA_VERSION,
        "kind": "kdclass-model",
        "d": model.d,
        "uniform_priors": model.uniform_priors,
        "priors": [float(p) for p in model.priors],
        "params": {
            "c0": model.params.c0,
            "gamma": model.params.gamma,
            "h_min": model.params.h_min,
            "max_steps": model.params.max_steps,
            "raw_variance": model.params.raw_variance,
        },
        "classes": [
            {"label": g.label, "samples": [[float(v) for v in row] for row in g.samples]}
            for g in model.groups
        ],
    }


def _model_from_dict(doc: dict) -> FitModel:
    if not isinstance(doc, dict) or doc.get("kind") != "kdclass-model":
        raise ValueError("not a classifier model file")
    version = doc.get("schema_version")
    if version != _SCHEMA_VERSION:
        raise ValueError(f"unsupported model schema version: {version!r}")
    try:
        params = ShrinkParams(**doc["params"])
        groups = [
            ClassGroup(
                label=str(c["label"]),
                samples=np.asarray(c["samples"], dtype=np.float64),
            )
            for c in doc["classes"]
        ]
        priors = np.asarray(doc["priors"], dtype=np.float64)
        uniform = bool(doc["uniform_priors"])
    except (KeyError, TypeError) as exc:
        raise ValueError(f"malformed model file: {exc}") from None
    if len(groups) < 2:
        raise ValueError("model must carry at least 2 classes")
    d = doc["d"]
    for g in groups:
        if g.samples.ndim != 2 or g.samples.shape[1] != d:
            raise ValueError("model class sample shapes disagree with d")
    if priors.shape[0] != len(groups) or not math.isclose(float(priors.sum()), 1.0, rel_tol=1e-9):
        raise ValueError("model priors must match classes and sum to 1")
    return FitModel(groups=groups, priors=priors, params=params, uniform_priors=uniform)


def save_model(path, model: FitModel) -> None:
    """Write the model as versioned JSON (sorted keys, exact float repr)."""
    with open(path, "w") as fh:
        json.dump(_model_to_dict(model), fh, sort_keys=True, indent=1)
        fh.write("\n")


def load_model(path) -> FitModel:
    """Read a model written by :func:`save_model`, validating the schema."""
    with open(path, "r") as fh:
        try:
            doc = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON: {exc}") from None
    return _model_from_dict(doc)
