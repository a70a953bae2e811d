"""Desk-scale baseline gesture classifier.

Per-class one-vs-rest logistic regression on 32x32 block-mean grayscale
features, trained with full-batch gradient descent.  Small enough to train in
seconds on synthetic data while exercising the same classifier contract as a
heavyweight backend.
"""

from __future__ import annotations

import hashlib
import json
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import kernels
from .dataset import DatasetManifest, read_clip_frames
from .errors import ConfigurationError, InputError
from .vision import ClassScores, FrameSample, N_CLASSES

logger = logging.getLogger(__name__)

FEATURE_DIM = 32 * 32
MODEL_FORMAT = "handrub-baseline/1"


def frame_features(rgb: np.ndarray) -> np.ndarray:
    """1024-dim grayscale features in [0, 1] for one (h, w, 3) uint8 frame."""
    return kernels.gray32_features(rgb)


@dataclass(frozen=True)
class BaselineModel:
    weights: np.ndarray  # (9, feature_dim)
    biases: np.ndarray  # (9,)
    trained_on: str  # manifest digest (sha256 hex)

    def __post_init__(self):
        if self.weights.shape != (N_CLASSES, FEATURE_DIM):
            raise ConfigurationError(
                f"weights shape {self.weights.shape} != {(N_CLASSES, FEATURE_DIM)}"
            )
        if self.biases.shape != (N_CLASSES,):
            raise ConfigurationError(f"biases shape {self.biases.shape} != (9,)")

    @property
    def feature_dim(self) -> int:
        return self.weights.shape[1]

    def digest(self) -> str:
        h = hashlib.sha256()
        h.update(np.ascontiguousarray(self.weights).tobytes())
        h.update(np.ascontiguousarray(self.biases).tobytes())
        return h.hexdigest()[:16]


def save_model(model: BaselineModel, path: str | Path) -> None:
    obj = {
        "format": MODEL_FORMAT,
        "feature_dim": FEATURE_DIM,
        "n_classes": N_CLASSES,
        "weights": model.weights.tolist(),
        "biases": model.biases.tolist(),
        "trained_on": model.trained_on,
    }
    Path(path).write_text(json.dumps(obj) + "\n")


def load_model(path: str | Path) -> BaselineModel:
    try:
        obj = json.loads(Path(path).read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise ConfigurationError(f"cannot read model file {path}: {exc}") from exc
    if obj.get("format") != MODEL_FORMAT:
        raise ConfigurationError(
            f"model file {path} has format {obj.get('format')!r}, expected {MODEL_FORMAT}"
        )
    if obj.get("feature_dim") != FEATURE_DIM or obj.get("n_classes") != N_CLASSES:
        raise ConfigurationError(f"model file {path} dimension mismatch")
    return BaselineModel(
        weights=np.asarray(obj["weights"], dtype=np.float64),
        biases=np.asarray(obj["biases"], dtype=np.float64),
        trained_on=obj.get("trained_on", ""),
    )


def _sigmoid(z: np.ndarray) -> np.ndarray:
    out = np.empty_like(z)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return out


def training_loss(
    weights: np.ndarray, biases: np.ndarray, x: np.ndarray, y: np.ndarray
) -> float:
    """Mean sigmoid binary cross-entropy over samples and classes.

    Uses the softplus form softplus(z) - y*z, exact for any logit (no
    probability clamping), which keeps the gradient check well-posed.
    """
    z = x @ weights.T + biases
    return float(np.mean(np.logaddexp(0.0, z) - y * z))


def training_gradients(
    weights: np.ndarray, biases: np.ndarray, x: np.ndarray, y: np.ndarray
) -> tuple[np.ndarray, np.ndarray]:
    """Analytic gradients of ``training_loss`` w.r.t. weights and biases."""
    n = x.shape[0]
    z = x @ weights.T + biases
    err = _sigmoid(z) - y  # (n, 9)
    grad_w = err.T @ x / (n * N_CLASSES)
    grad_b = err.sum(axis=0) / (n * N_CLASSES)
    return grad_w, grad_b


def manifest_features(
    manifest: DatasetManifest, stride: int = 1
) -> tuple[np.ndarray, np.ndarray]:
    """(features, labels) arrays for every decoded frame of every clip."""
    feats: list[np.ndarray] = []
    labels: list[int] = []
    for clip in manifest.clips:
        for rgb in read_clip_frames(manifest, clip, stride=stride):
            feats.append(frame_features(rgb))
            labels.append(clip.label)
    if not feats:
        raise InputError("manifest produced no frames")
    return np.stack(feats), np.asarray(labels, dtype=np.int64)


def train_baseline(
    train: DatasetManifest,
    epochs: int = 300,
    lr: float = 5.0,
    stride: int = 1,
) -> BaselineModel:
    """Full-batch gradient descent from zero weights; deterministic.

    ``epochs=0`` returns the zero-initialised model unchanged.
    """
    if not train.clips:
        raise InputError("training manifest is empty")
    if epochs < 0:
        raise ConfigurationError(f"epochs must be >= 0, got {epochs}")
    if lr <= 0:
        raise ConfigurationError(f"lr must be > 0, got {lr}")

    x, labels = manifest_features(train, stride=stride)
    present = set(int(c) for c in np.unique(labels))
    missing = sorted(set(range(N_CLASSES)) - present)
    if missing:
        logger.warning("training set has no frames for classes %s", missing)

    y = np.zeros((x.shape[0], N_CLASSES), dtype=np.float64)
    y[np.arange(x.shape[0]), labels] = 1.0

    w = np.zeros((N_CLASSES, FEATURE_DIM), dtype=np.float64)
    b = np.zeros(N_CLASSES, dtype=np.float64)
    for _ in range(epochs):
        grad_w, grad_b = training_gradients(w, b, x, y)
        w -= lr * grad_w
        b -= lr * grad_b

    digest = hashlib.sha256(train.digest_payload().encode()).hexdigest()[:16]
    return BaselineModel(weights=w, biases=b, trained_on=digest)


class BaselineClassifier:
    """GestureClassifier backend over a trained BaselineModel."""

    def __init__(self, model: BaselineModel):
        if model.feature_dim != FEATURE_DIM:
            raise ConfigurationError(
                f"model feature_dim {model.feature_dim} != {FEATURE_DIM}"
            )
        self.model = model
        self.descriptor = f"baseline/1 digest={model.digest()}"

    def classify(self, frame: FrameSample) -> ClassScores:
        feats = frame_features(frame.rgb())
        z = self.model.weights @ feats + self.model.biases
        probs = _sigmoid(z)
        return ClassScores(scores=tuple(float(p) for p in probs), t_ms=frame.t_ms)
