"""Pseudo-label quality against held-out full annotations.

Standard detection-style bookkeeping: greedy matching by descending IoU
with class agreement, each ground-truth box claimable once.  Deliberately
not the filter's Hungarian matcher — this mirrors how detection metrics
count hits, so numbers here are comparable to evaluation folklore.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .annotation import Fully
from .filtering import PseudoLabelSet
from .geometry import box_cxcywh_to_xyxy, pairwise_iou


@dataclass(frozen=True)
class QualityReport:
    """Precision/recall at one IoU threshold plus match statistics."""

    precision: float
    recall: float
    mean_iou_matched: float
    tp: int
    fp: int
    fn: int

    def __post_init__(self) -> None:
        if min(self.tp, self.fp, self.fn) < 0:
            raise ValueError("counts must be >= 0")
        expect_p = self.tp / (self.tp + self.fp) if self.tp + self.fp else 1.0
        expect_r = self.tp / (self.tp + self.fn) if self.tp + self.fn else 1.0
        if abs(self.precision - expect_p) > 1e-12 or abs(self.recall - expect_r) > 1e-12:
            raise ValueError("precision/recall inconsistent with counts")


def score_pseudo(pseudo: PseudoLabelSet, gt: Fully, iou_thresh: float) -> QualityReport:
    """Count true/false positives of ``pseudo`` against ``gt`` at the given
    IoU threshold (a hit needs matching class and IoU >= threshold; empty
    pseudo sets are vacuously precise)."""
    if not (math.isfinite(iou_thresh) and 0.0 < iou_thresh < 1.0):
        raise ValueError(f"iou_thresh must lie in (0, 1), got {iou_thresh}")
    n_pseudo = len(pseudo)
    n_gt = len(gt.pairs)

    candidates: list[tuple[float, int, int]] = []
    if n_pseudo and n_gt:
        p_xyxy = box_cxcywh_to_xyxy(
            np.array([it.box.to_array() for it in pseudo], dtype=np.float64))
        g_xyxy = box_cxcywh_to_xyxy(gt.boxes_array())
        iou = pairwise_iou(p_xyxy, g_xyxy)
        gt_classes = gt.class_ids()
        for i, it in enumerate(pseudo):
            for j in range(n_gt):
                if it.class_id == gt_classes[j] and iou[i, j] >= iou_thresh:
                    candidates.append((float(iou[i, j]), i, j))

    candidates.sort(key=lambda t: (-t[0], t[1], t[2]))
    used_p: set[int] = set()
    used_g: set[int] = set()
    matched_ious: list[float] = []
    for value, i, j in candidates:
        if i in used_p or j in used_g:
            continue
        used_p.add(i)
        used_g.add(j)
        matched_ious.append(value)

    tp = len(matched_ious)
    fp = n_pseudo - tp
    fn = n_gt - tp
    return QualityReport(
        precision=tp / (tp + fp) if tp + fp else 1.0,
        recall=tp / (tp + fn) if tp + fn else 1.0,
        mean_iou_matched=float(np.mean(matched_ious)) if matched_ious else 0.0,
        tp=tp, fp=fp, fn=fn)
