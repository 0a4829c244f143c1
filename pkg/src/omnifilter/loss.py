"""Deterministic single-image training-loss evaluation.

Matches labels to queries the same way training would (class-probability
term plus the weighted GIoU/L1 box cost, solved exactly), then scores the
assignment: sigmoid focal loss over all queries with unmatched ones treated
as background, and the weighted box regression loss over matched pairs.
Useful as a regression oracle for any downstream trainer.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ._kernels import box_match_cost
from .geometry import BoundingBox, box_cxcywh_to_xyxy, elementwise_giou
from .matching import CostMatrix, hungarian
from .prediction import TeacherPrediction, score

_TOTAL_TOL = 1e-9


@dataclass(frozen=True)
class LossConfig:
    """Loss weights and focal-loss shape parameters."""

    alpha: float = 2.0
    beta: float = 5.0
    lambda_iou: float = 2.0
    lambda_l1: float = 5.0
    focal_gamma: float = 2.0
    focal_alpha: float = 0.25

    def __post_init__(self) -> None:
        for name in ("alpha", "beta", "lambda_iou", "lambda_l1", "focal_gamma"):
            v = getattr(self, name)
            if not (math.isfinite(v) and v >= 0):
                raise ValueError(f"{name} must be finite and >= 0, got {v}")
        if not (math.isfinite(self.focal_alpha) and 0.0 <= self.focal_alpha <= 1.0):
            raise ValueError(f"focal_alpha must lie in [0, 1], got {self.focal_alpha}")


@dataclass(frozen=True)
class LossBreakdown:
    """Classification and box parts plus their weighted total."""

    cls: float
    box: float
    total: float
    alpha: float = 2.0
    beta: float = 5.0

    def __post_init__(self) -> None:
        if self.cls < 0 or self.box < 0:
            raise ValueError(f"loss parts must be >= 0, got cls={self.cls}, box={self.box}")
        if abs(self.total - (self.alpha * self.cls + self.beta * self.box)) > _TOTAL_TOL:
            raise ValueError("total must equal alpha*cls + beta*box")


def _sigmoid_focal(logits: np.ndarray, targets: np.ndarray,
                   gamma: float, alpha: float) -> np.ndarray:
    """Elementwise focal-modulated binary cross-entropy on logits."""
    p = 1.0 / (1.0 + np.exp(-logits))
    bce = np.maximum(logits, 0.0) - logits * targets + np.log1p(np.exp(-np.abs(logits)))
    p_t = p * targets + (1.0 - p) * (1.0 - targets)
    weight = alpha * targets + (1.0 - alpha) * (1.0 - targets)
    return weight * (1.0 - p_t) ** gamma * bce


def eval_loss(pred: TeacherPrediction,
              labels: Sequence[tuple[BoundingBox, int]],
              cfg: LossConfig = LossConfig()) -> LossBreakdown:
    """Evaluate the loss of ``pred`` against ``labels`` for one image.

    Both parts are normalized by the number of labels (floored at one, so
    an unlabeled image still pays its background classification term).
    """
    labels = list(labels)
    g = len(labels)
    k = pred.num_queries
    c = pred.num_classes
    if g > k:
        raise ValueError(f"{g} labels exceed the {k} available queries")
    classes = [int(cid) for _, cid in labels]
    for cid in classes:
        if not 0 <= cid < c:
            raise ValueError(f"class id {cid} out of range [0, {c})")

    denom = max(g, 1)
    targets = np.zeros((k, c), dtype=np.float64)
    box_term = 0.0
    if g:
        gt = np.array([b.to_array() for b, _ in labels], dtype=np.float64)
        sp = score(pred)
        cost = ((1.0 - sp.probs[:, classes].T)
                + box_match_cost(gt, pred.boxes, cfg.lambda_iou, cfg.lambda_l1))
        match = hungarian(CostMatrix(values=cost)).match
        for i, cid in enumerate(classes):
            targets[match[i], cid] = 1.0
        matched = pred.boxes[list(match)]
        giou = elementwise_giou(box_cxcywh_to_xyxy(gt), box_cxcywh_to_xyxy(matched))
        l1 = np.abs(gt - matched).sum(axis=1)
        box_term = float((cfg.lambda_iou * (1.0 - giou) + cfg.lambda_l1 * l1).sum()) / denom

    cls_term = float(_sigmoid_focal(pred.logits, targets,
                                    cfg.focal_gamma, cfg.focal_alpha).sum()) / denom
    return LossBreakdown(cls=cls_term, box=box_term,
                         total=cfg.alpha * cls_term + cfg.beta * box_term,
                         alpha=cfg.alpha, beta=cfg.beta)
