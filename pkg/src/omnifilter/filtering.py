"""Pseudo-label filtering.

Given a teacher's per-image predictions and whatever annotation that image
carries, produce pseudo-labels for student training.  The unified strategy
casts label-to-query selection as minimum-cost bipartite matching with a
format-specific cost and reads pseudo boxes/classes off the optimal
assignment; the simple strategy applies per-format heuristics (thresholds,
top-n, containment) and serves as the baseline.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Iterator, Sequence

import numpy as np

from ._kernels import box_match_cost
from .annotation import (BoxesEC, BoxesU, Fully, NoLabel, OmniLabel, PointsK,
                         PointsU, TagsK, TagsU)
from .geometry import BoundingBox, Point2D, box_cxcywh_to_xyxy
from .matching import BIG, CostMatrix, hungarian
from .prediction import ScoredPrediction, TeacherPrediction, score


@dataclass(frozen=True)
class FilterConfig:
    """Filter hyper-parameters; the defaults are the tuned operating point."""

    tau: float = 0.7
    gamma: float = 0.5
    lambda_iou: float = 2.0
    lambda_l1: float = 5.0
    strategy: str = "unified"
    drop_infeasible: bool = False

    def __post_init__(self) -> None:
        if not (math.isfinite(self.tau) and 0.0 < self.tau < 1.0):
            raise ValueError(f"tau must lie in (0, 1), got {self.tau}")
        if not (math.isfinite(self.gamma) and 0.0 <= self.gamma <= 1.0):
            raise ValueError(f"gamma must lie in [0, 1], got {self.gamma}")
        if not (math.isfinite(self.lambda_iou) and self.lambda_iou >= 0):
            raise ValueError(f"lambda_iou must be >= 0, got {self.lambda_iou}")
        if not (math.isfinite(self.lambda_l1) and self.lambda_l1 >= 0):
            raise ValueError(f"lambda_l1 must be >= 0, got {self.lambda_l1}")
        if self.strategy not in ("unified", "simple"):
            raise ValueError(f"strategy must be 'unified' or 'simple', got {self.strategy!r}")


@dataclass(frozen=True)
class PseudoLabel:
    """One training target: a box, a class, and where it came from."""

    box: BoundingBox
    class_id: int
    score: float
    source_query: int
    matched_cost: float = 0.0
    infeasible: bool = False

    def __post_init__(self) -> None:
        if self.class_id < 0:
            raise ValueError(f"class_id must be >= 0, got {self.class_id}")
        if self.source_query < 0:
            raise ValueError(f"source_query must be >= 0, got {self.source_query}")


@dataclass(frozen=True)
class PseudoLabelSet:
    """The pseudo-labels of one image.  Source queries are distinct."""

    items: tuple[PseudoLabel, ...]

    def __post_init__(self) -> None:
        queries = [it.source_query for it in self.items]
        if len(set(queries)) != len(queries):
            raise ValueError(f"source_query indices must be distinct, got {queries}")

    def __len__(self) -> int:
        return len(self.items)

    def __iter__(self) -> Iterator[PseudoLabel]:
        return iter(self.items)

    def class_ids(self) -> tuple[int, ...]:
        return tuple(it.class_id for it in self.items)


def _check_classes(classes: Sequence[int], num_classes: int) -> None:
    for c in classes:
        if not 0 <= int(c) < num_classes:
            raise ValueError(f"class id {c} out of range [0, {num_classes})")


def _as_box_array(boxes) -> np.ndarray:
    if isinstance(boxes, np.ndarray):
        return np.atleast_2d(np.asarray(boxes, dtype=np.float64))
    return np.array([b.to_array() for b in boxes], dtype=np.float64).reshape(-1, 4)


def _pred_box(boxes: np.ndarray, k: int) -> BoundingBox:
    """Emit a predicted box, bit-exact when it is already valid.

    Predicted extents may overhang the unit square (center-size outputs are
    not extent-bounded); those get the standard ingestion clamp.
    """
    vals = tuple(float(x) for x in boxes[k])
    try:
        return BoundingBox(*vals)
    except ValueError:
        return BoundingBox.clamped(*vals)


# ---------------------------------------------------------------------------
# Cost-matrix builders, one per weak-annotation family.

def predict_counts(sp: ScoredPrediction, tags: Sequence[int], tau: float) -> list[int]:
    """Per-tag object counts: how many queries give the tag's class a
    probability above ``tau``, floored at one (every tag names at least one
    object)."""
    tags = [int(c) for c in tags]
    if not tags:
        raise ValueError("need at least one class tag")
    if len(set(tags)) != len(tags):
        raise ValueError(f"tags must be unique, got {tags}")
    _check_classes(tags, sp.num_classes)
    return [max(1, int(np.count_nonzero(sp.probs[:, c] > tau))) for c in tags]


def tag_cost(sp: ScoredPrediction, expanded_tags: Sequence[int]) -> CostMatrix:
    """Cost of pairing entity i (class c_i) with query k: ``1 - p_k^{c_i}``."""
    t = np.asarray([int(c) for c in expanded_tags], dtype=np.int64)
    if t.size < 1:
        raise ValueError("need at least one expanded tag")
    _check_classes(t.tolist(), sp.num_classes)
    return CostMatrix(values=1.0 - sp.probs[:, t].T)


def point_cost(sp: ScoredPrediction, boxes_cxcywh: np.ndarray,
               points: Sequence[Point2D]) -> CostMatrix:
    """Cost of pairing point i with query k: normalized center distance plus
    ``1 - s_k``, or BIG when the query's box does not contain the point.

    Distances are min-max normalized over all G x K raw values (all equal ⇒
    identically zero), so the distance term always lies in [0, 1].
    """
    boxes = np.atleast_2d(np.asarray(boxes_cxcywh, dtype=np.float64))
    pts = np.array([[p.px, p.py] for p in points], dtype=np.float64).reshape(-1, 2)
    if pts.shape[0] < 1:
        raise ValueError("need at least one point")

    raw = np.hypot(pts[:, 0][:, None] - boxes[:, 0][None, :],
                   pts[:, 1][:, None] - boxes[:, 1][None, :])
    dmin = raw.min()
    dmax = raw.max()
    if dmax > dmin:
        d = (raw - dmin) / (dmax - dmin)
    else:
        d = np.zeros_like(raw)

    xyxy = box_cxcywh_to_xyxy(boxes)
    inside = ((xyxy[None, :, 0] <= pts[:, 0][:, None])
              & (pts[:, 0][:, None] <= xyxy[None, :, 2])
              & (xyxy[None, :, 1] <= pts[:, 1][:, None])
              & (pts[:, 1][:, None] <= xyxy[None, :, 3]))
    values = np.where(inside, d + (1.0 - sp.score)[None, :], BIG)
    return CostMatrix(values=values)


def point_tag_cost(sp: ScoredPrediction, boxes_cxcywh: np.ndarray,
                   pairs: Sequence[tuple[Point2D, int]], gamma: float) -> CostMatrix:
    """Blend of tag and point costs, ``gamma*tag + (1-gamma)*point``;
    infeasible point entries stay BIG regardless of gamma."""
    if not (math.isfinite(gamma) and 0.0 <= gamma <= 1.0):
        raise ValueError(f"gamma must lie in [0, 1], got {gamma}")
    pairs = list(pairs)
    t = tag_cost(sp, [c for _, c in pairs]).values
    p = point_cost(sp, boxes_cxcywh, [pt for pt, _ in pairs]).values
    values = np.where(p >= BIG / 2, BIG, gamma * t + (1.0 - gamma) * p)
    return CostMatrix(values=values)


def box_cost(pred_boxes: np.ndarray, gt_boxes: Sequence[BoundingBox] | np.ndarray,
             lambda_iou: float = 2.0, lambda_l1: float = 5.0) -> CostMatrix:
    """``lambda_iou*(1 - GIoU) + lambda_l1*L1`` between every ground-truth
    box (rows) and predicted box (columns), in center-size coordinates."""
    g = _as_box_array(gt_boxes)
    if g.shape[0] < 1:
        raise ValueError("need at least one ground-truth box")
    q = np.atleast_2d(np.asarray(pred_boxes, dtype=np.float64))
    return CostMatrix(values=box_match_cost(g, q, float(lambda_iou), float(lambda_l1)))


# ---------------------------------------------------------------------------
# Filters.

def filter_none(sp: ScoredPrediction, boxes_cxcywh: np.ndarray,
                cfg: FilterConfig) -> PseudoLabelSet:
    """Keep every prediction whose confidence strictly exceeds ``cfg.tau``."""
    boxes = np.atleast_2d(np.asarray(boxes_cxcywh, dtype=np.float64))
    items = tuple(
        PseudoLabel(box=_pred_box(boxes, int(k)), class_id=int(sp.pred_class[k]),
                    score=float(sp.score[k]), source_query=int(k))
        for k in np.nonzero(sp.score > cfg.tau)[0]
    )
    return PseudoLabelSet(items=items)


def _cap_expansion(tags: Sequence[int], counts: list[int], k_queries: int) -> list[int]:
    """Trim predicted counts so the expansion fits the K query slots,
    shaving the largest counts first (ties: the higher class id)."""
    total = sum(counts)
    if total <= k_queries:
        return counts
    if len(tags) > k_queries:
        raise ValueError(f"{len(tags)} tags exceed the {k_queries} available queries")
    warnings.warn(f"predicted counts sum to {total} > K={k_queries}; truncating",
                  stacklevel=2)
    counts = list(counts)
    for _ in range(total - k_queries):
        j = max((j for j in range(len(counts)) if counts[j] > 1),
                key=lambda j: (counts[j], tags[j]))
        counts[j] -= 1
    return counts


def _finalize(items: list[PseudoLabel], cfg: FilterConfig) -> PseudoLabelSet:
    if cfg.drop_infeasible:
        items = [it for it in items if not it.infeasible]
    return PseudoLabelSet(items=tuple(items))


def unified_filter(pred: TeacherPrediction, label: OmniLabel,
                   cfg: FilterConfig = FilterConfig()) -> PseudoLabelSet:
    """Match label entities to queries at minimum total cost, then emit one
    pseudo-label per entity.

    Emission by format: tags take the matched query's box with the tag's
    class; unknown-class points take the matched query's box and argmax
    class; known-class points keep their tag; box formats keep the
    annotated box and take the matched query's class.
    """
    sp = score(pred)
    if isinstance(label, NoLabel):
        return filter_none(sp, pred.boxes, cfg)
    if isinstance(label, Fully):
        raise ValueError("fully labelled images do not need filtering")
    k_queries = pred.num_queries

    if isinstance(label, (TagsU, TagsK)):
        if isinstance(label, TagsU):
            tags = [int(c) for c in label.classes]
            if not tags:
                raise ValueError("empty tag list")
            counts = _cap_expansion(tags, predict_counts(sp, tags, cfg.tau), k_queries)
        else:
            tags = [int(c) for c, _ in label.pairs]
            if not tags:
                raise ValueError("empty tag list")
            _check_classes(tags, sp.num_classes)
            counts = [int(n) for _, n in label.pairs]
            if sum(counts) > k_queries:
                raise ValueError(f"label claims {sum(counts)} objects "
                                 f"but only {k_queries} queries exist")
        expanded = [c for c, n in zip(tags, counts) for _ in range(n)]
        cm = tag_cost(sp, expanded)
        a = hungarian(cm)
        bad = set(a.infeasible_rows)
        items = [
            PseudoLabel(box=_pred_box(pred.boxes, q), class_id=c,
                        score=float(sp.probs[q, c]), source_query=q,
                        matched_cost=float(cm.values[i, q]), infeasible=i in bad)
            for i, (c, q) in enumerate(zip(expanded, a.match))
        ]
        return _finalize(items, cfg)

    if isinstance(label, PointsU):
        points = list(label.points)
        if not points:
            raise ValueError("empty point list")
        if len(points) > k_queries:
            raise ValueError(f"{len(points)} points exceed the {k_queries} available queries")
        cm = point_cost(sp, pred.boxes, points)
        a = hungarian(cm)
        bad = set(a.infeasible_rows)
        items = [
            PseudoLabel(box=_pred_box(pred.boxes, q), class_id=int(sp.pred_class[q]),
                        score=float(sp.score[q]), source_query=q,
                        matched_cost=float(cm.values[i, q]), infeasible=i in bad)
            for i, q in enumerate(a.match)
        ]
        return _finalize(items, cfg)

    if isinstance(label, PointsK):
        pairs = [(p, int(c)) for p, c in label.pairs]
        if not pairs:
            raise ValueError("empty point list")
        if len(pairs) > k_queries:
            raise ValueError(f"{len(pairs)} points exceed the {k_queries} available queries")
        _check_classes([c for _, c in pairs], sp.num_classes)
        cm = point_tag_cost(sp, pred.boxes, pairs, cfg.gamma)
        a = hungarian(cm)
        bad = set(a.infeasible_rows)
        items = [
            PseudoLabel(box=_pred_box(pred.boxes, q), class_id=c,
                        score=float(sp.probs[q, c]), source_query=q,
                        matched_cost=float(cm.values[i, q]), infeasible=i in bad)
            for i, ((_, c), q) in enumerate(zip(pairs, a.match))
        ]
        return _finalize(items, cfg)

    if isinstance(label, (BoxesU, BoxesEC)):
        gt = list(label.boxes)
        if not gt:
            raise ValueError("empty box list")
        if len(gt) > k_queries:
            raise ValueError(f"{len(gt)} boxes exceed the {k_queries} available queries")
        cm = box_cost(pred.boxes, gt, cfg.lambda_iou, cfg.lambda_l1)
        a = hungarian(cm)
        bad = set(a.infeasible_rows)
        items = [
            PseudoLabel(box=gt[i], class_id=int(sp.pred_class[q]),
                        score=float(sp.score[q]), source_query=q,
                        matched_cost=float(cm.values[i, q]), infeasible=i in bad)
            for i, q in enumerate(a.match)
        ]
        return _finalize(items, cfg)

    raise TypeError(f"unsupported label type {type(label).__name__}")


def simple_filter(pred: TeacherPrediction, label: OmniLabel,
                  cfg: FilterConfig = FilterConfig()) -> PseudoLabelSet:
    """Per-format heuristic baseline.

    Tags without counts: every query above ``tau`` for the tag's class, or
    the single best query as a fallback.  Tags with counts: the top-n
    queries per class.  Points: the highest-confidence containing query
    (matching the tag too, when one is given).  Each query is used at most
    once; box formats have no heuristic rule and raise.
    """
    sp = score(pred)
    if isinstance(label, NoLabel):
        return filter_none(sp, pred.boxes, cfg)
    if isinstance(label, (BoxesU, BoxesEC, Fully)):
        raise ValueError(f"no simple filter for {type(label).__name__} labels")

    taken: set[int] = set()
    items: list[PseudoLabel] = []

    if isinstance(label, TagsU):
        tags = [int(c) for c in label.classes]
        if not tags:
            raise ValueError("empty tag list")
        _check_classes(tags, sp.num_classes)
        for c in tags:
            col = sp.probs[:, c]
            above = [int(k) for k in np.nonzero(col > cfg.tau)[0] if int(k) not in taken]
            if above:
                chosen = sorted(above, key=lambda k: (-col[k], k))
            else:
                order = np.argsort(-col, kind="stable")
                free = [int(k) for k in order if int(k) not in taken]
                if not free:
                    raise ValueError("ran out of unused queries while selecting tags")
                chosen = free[:1]
            for k in chosen:
                taken.add(k)
                items.append(PseudoLabel(box=_pred_box(pred.boxes, k), class_id=c,
                                         score=float(col[k]), source_query=k))
        return PseudoLabelSet(items=tuple(items))

    if isinstance(label, TagsK):
        if not label.pairs:
            raise ValueError("empty tag list")
        _check_classes([c for c, _ in label.pairs], sp.num_classes)
        if sum(n for _, n in label.pairs) > pred.num_queries:
            raise ValueError(f"label claims {sum(n for _, n in label.pairs)} objects "
                             f"but only {pred.num_queries} queries exist")
        for c, n in label.pairs:
            col = sp.probs[:, c]
            order = np.argsort(-col, kind="stable")
            free = [int(k) for k in order if int(k) not in taken]
            for k in free[:n]:
                taken.add(k)
                items.append(PseudoLabel(box=_pred_box(pred.boxes, k), class_id=int(c),
                                         score=float(col[k]), source_query=k))
        return PseudoLabelSet(items=tuple(items))

    if isinstance(label, (PointsU, PointsK)):
        if isinstance(label, PointsU):
            pairs: list[tuple[Point2D, int | None]] = [(p, None) for p in label.points]
        else:
            pairs = [(p, int(c)) for p, c in label.pairs]
            _check_classes([c for _, c in pairs], sp.num_classes)
        if not pairs:
            raise ValueError("empty point list")
        xyxy = box_cxcywh_to_xyxy(pred.boxes)
        for p, c in pairs:
            inside = ((xyxy[:, 0] <= p.px) & (p.px <= xyxy[:, 2])
                      & (xyxy[:, 1] <= p.py) & (p.py <= xyxy[:, 3]))
            if c is not None:
                inside &= sp.pred_class == c
            cands = [int(k) for k in np.nonzero(inside)[0] if int(k) not in taken]
            if not cands:
                continue
            k = cands[int(np.argmax(sp.score[cands]))]
            taken.add(k)
            items.append(PseudoLabel(
                box=_pred_box(pred.boxes, k),
                class_id=int(sp.pred_class[k]) if c is None else c,
                score=float(sp.score[k]), source_query=k))
        return PseudoLabelSet(items=tuple(items))

    raise TypeError(f"unsupported label type {type(label).__name__}")


def filter_image(pred: TeacherPrediction, label: OmniLabel,
                 cfg: FilterConfig = FilterConfig()) -> PseudoLabelSet:
    """Route to the strategy named in ``cfg``."""
    if cfg.strategy == "simple":
        return simple_filter(pred, label, cfg)
    return unified_filter(pred, label, cfg)
