"""Teacher-output containers and score derivation.

A detector emits, per image, K query slots each carrying a logit vector
over C classes and a box.  Scores are softmax probabilities; the per-query
confidence is the probability of the argmax class.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Any

import numpy as np

DEFAULT_NUM_QUERIES = 300


def _readonly(a: np.ndarray) -> np.ndarray:
    a = np.ascontiguousarray(a, dtype=np.float64)
    a.setflags(write=False)
    return a


@dataclass(frozen=True)
class TeacherPrediction:
    """Raw per-image detector output: K x C logits and K boxes (cxcywh)."""

    image_id: Any
    logits: np.ndarray
    boxes: np.ndarray

    def __post_init__(self) -> None:
        logits = _readonly(np.atleast_2d(self.logits))
        boxes = _readonly(np.atleast_2d(self.boxes))
        if logits.ndim != 2 or logits.shape[0] < 1 or logits.shape[1] < 1:
            raise ValueError(f"logits must be a K x C matrix with K, C >= 1, got shape {logits.shape}")
        if boxes.ndim != 2 or boxes.shape[1] != 4:
            raise ValueError(f"boxes must be a K x 4 matrix, got shape {boxes.shape}")
        if boxes.shape[0] != logits.shape[0]:
            raise ValueError(f"{logits.shape[0]} logit rows but {boxes.shape[0]} boxes")
        if not np.isfinite(logits).all():
            raise ValueError("logits must be finite")
        if not np.isfinite(boxes).all():
            raise ValueError("boxes must be finite")
        object.__setattr__(self, "logits", logits)
        object.__setattr__(self, "boxes", boxes)

    @property
    def num_queries(self) -> int:
        return self.logits.shape[0]

    @property
    def num_classes(self) -> int:
        return self.logits.shape[1]


@dataclass(frozen=True)
class ScoredPrediction:
    """Softmax view of a prediction: probabilities, argmax class, confidence."""

    probs: np.ndarray
    pred_class: np.ndarray
    score: np.ndarray

    def __post_init__(self) -> None:
        object.__setattr__(self, "probs", _readonly(self.probs))
        pc = np.ascontiguousarray(self.pred_class, dtype=np.int64)
        pc.setflags(write=False)
        object.__setattr__(self, "pred_class", pc)
        object.__setattr__(self, "score", _readonly(self.score))

    @property
    def num_queries(self) -> int:
        return self.probs.shape[0]

    @property
    def num_classes(self) -> int:
        return self.probs.shape[1]


def score(pred: TeacherPrediction) -> ScoredPrediction:
    """Row-wise stabilized softmax; ties in the argmax pick the smallest
    class index."""
    z = pred.logits
    shifted = z - z.max(axis=1, keepdims=True)
    e = np.exp(shifted)
    probs = e / e.sum(axis=1, keepdims=True)
    pred_class = probs.argmax(axis=1)
    conf = probs[np.arange(probs.shape[0]), pred_class]
    return ScoredPrediction(probs=probs, pred_class=pred_class, score=conf)
