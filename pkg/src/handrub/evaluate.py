"""Classifier evaluation: accuracy, mean binary cross-entropy, confusion.

Predictions for the confusion matrix use argmax over the 9 scores (ties break
toward the lowest class index); the loss treats each class as an independent
sigmoid output with probabilities clamped to [1e-7, 1 - 1e-7].
"""

from __future__ import annotations

import csv
import io
import json
import logging
from dataclasses import dataclass, field

import numpy as np

from .dataset import DatasetManifest, read_clip_frames
from .errors import InputError
from .vision import FrameSample, GestureClassifier, N_CLASSES

logger = logging.getLogger(__name__)

PROB_CLAMP = 1e-7


@dataclass(frozen=True)
class EvalReport:
    loss: float
    accuracy: float
    confusion: np.ndarray  # (9, 9) int counts, rows=true, cols=predicted
    n_frames: int
    completeness: float = 1.0
    clip_errors: tuple[str, ...] = field(default_factory=tuple)

    def to_json_obj(self) -> dict:
        return {
            "loss": self.loss,
            "accuracy": self.accuracy,
            "confusion": self.confusion.tolist(),
            "n_frames": self.n_frames,
            "completeness": self.completeness,
            "clip_errors": list(self.clip_errors),
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_obj(), indent=2) + "\n"

    def confusion_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(["true\\pred"] + [str(c) for c in range(N_CLASSES)])
        for r in range(N_CLASSES):
            writer.writerow([r] + [int(v) for v in self.confusion[r]])
        return buf.getvalue()


def eval_report_from_scores(
    scores: np.ndarray, labels: np.ndarray, completeness: float = 1.0,
    clip_errors: tuple[str, ...] = (),
) -> EvalReport:
    """Report math over an (n, 9) score matrix and (n,) true labels.

    accuracy is computed as trace(confusion)/total so the trace identity
    holds exactly by construction.
    """
    scores = np.asarray(scores, dtype=np.float64)
    labels = np.asarray(labels, dtype=np.int64)
    if scores.ndim != 2 or scores.shape[1] != N_CLASSES:
        raise InputError(f"scores must be (n, {N_CLASSES}), got {scores.shape}")
    if labels.shape != (scores.shape[0],):
        raise InputError("labels length must match scores rows")
    n = scores.shape[0]
    if n == 0:
        raise InputError("cannot evaluate zero frames")
    if labels.min() < 0 or labels.max() >= N_CLASSES:
        raise InputError("labels outside 0..8")

    preds = np.argmax(scores, axis=1)  # first maximum = lowest index on ties
    confusion = np.zeros((N_CLASSES, N_CLASSES), dtype=np.int64)
    np.add.at(confusion, (labels, preds), 1)

    p = np.clip(scores, PROB_CLAMP, 1.0 - PROB_CLAMP)
    y = np.zeros_like(p)
    y[np.arange(n), labels] = 1.0
    loss = float(np.mean(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p))))

    accuracy = float(np.trace(confusion)) / float(n)
    return EvalReport(
        loss=loss,
        accuracy=accuracy,
        confusion=confusion,
        n_frames=n,
        completeness=completeness,
        clip_errors=clip_errors,
    )


def evaluate_classifier(
    classifier: GestureClassifier,
    eval_set: DatasetManifest,
    stride: int = 5,
) -> EvalReport:
    """Score every ``stride``-th frame of every clip and build the report.

    Unreadable clips are recorded and skipped; the report's completeness is
    the fraction of clips that decoded.
    """
    if not eval_set.clips:
        raise InputError("evaluation manifest is empty")
    all_scores: list[tuple[float, ...]] = []
    all_labels: list[int] = []
    errors: list[str] = []
    for clip in eval_set.clips:
        try:
            for i, rgb in enumerate(read_clip_frames(eval_set, clip, stride=stride)):
                frame = FrameSample.from_rgb(t_ms=i, rgb=rgb)
                all_scores.append(classifier.classify(frame).scores)
                all_labels.append(clip.label)
        except Exception as exc:  # per-clip fault isolation
            logger.warning("clip %s unreadable: %s", clip.path, exc)
            errors.append(f"{clip.path}: {exc}")
    if not all_scores:
        raise InputError("no decodable frames in evaluation set")
    completeness = 1.0 - len(errors) / len(eval_set.clips)
    return eval_report_from_scores(
        np.asarray(all_scores),
        np.asarray(all_labels),
        completeness=completeness,
        clip_errors=tuple(errors),
    )
