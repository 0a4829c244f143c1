"""Weak-annotation formats, downgrading of full labels, and simulators.

Seven label formats attach to an image: nothing at all, class tags with or
without per-class counts, interior points with or without class tags, and
class-free boxes of two quality tiers (carefully drawn vs. quickly clicked).
``Fully`` is the eighth, fully supervised form that the weak ones are
derived from.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from enum import Enum
from typing import Sequence, Union

import numpy as np

from .geometry import (MIN_SIDE, BoundingBox, Point2D, box_cxcywh_to_xyxy,
                       box_xyxy_to_cxcywh, elementwise_iou)


class LabelFormat(str, Enum):
    NONE = "none"
    TAGS_U = "tags_u"
    TAGS_K = "tags_k"
    POINTS_U = "points_u"
    POINTS_K = "points_k"
    BOXES_U = "boxes_u"
    BOXES_EC = "boxes_ec"
    FULLY = "fully"


WEAK_FORMATS: tuple[LabelFormat, ...] = (
    LabelFormat.TAGS_U, LabelFormat.TAGS_K, LabelFormat.POINTS_U,
    LabelFormat.POINTS_K, LabelFormat.BOXES_U, LabelFormat.BOXES_EC,
)


@dataclass(frozen=True)
class NoLabel:
    """No annotation at all."""

    format = LabelFormat.NONE


@dataclass(frozen=True)
class TagsU:
    """Image-level class tags, deduplicated, without counts."""

    classes: tuple[int, ...]
    format = LabelFormat.TAGS_U

    def __post_init__(self) -> None:
        if len(set(self.classes)) != len(self.classes):
            raise ValueError(f"tag classes must be unique, got {self.classes}")
        if any(c < 0 for c in self.classes):
            raise ValueError(f"class ids must be >= 0, got {self.classes}")


@dataclass(frozen=True)
class TagsK:
    """Image-level class tags with an object count per class."""

    pairs: tuple[tuple[int, int], ...]

    format = LabelFormat.TAGS_K

    def __post_init__(self) -> None:
        classes = [c for c, _ in self.pairs]
        if len(set(classes)) != len(classes):
            raise ValueError(f"tag classes must be unique, got {classes}")
        if any(c < 0 for c in classes):
            raise ValueError(f"class ids must be >= 0, got {classes}")
        if any(n < 1 for _, n in self.pairs):
            raise ValueError(f"counts must be >= 1, got {self.pairs}")


@dataclass(frozen=True)
class PointsU:
    """One interior point per object, classes unknown."""

    points: tuple[Point2D, ...]
    format = LabelFormat.POINTS_U


@dataclass(frozen=True)
class PointsK:
    """One interior point per object together with its class tag."""

    pairs: tuple[tuple[Point2D, int], ...]

    format = LabelFormat.POINTS_K

    def __post_init__(self) -> None:
        if any(c < 0 for _, c in self.pairs):
            raise ValueError("class ids must be >= 0")


@dataclass(frozen=True)
class BoxesU:
    """Carefully annotated boxes with the class labels stripped."""

    boxes: tuple[BoundingBox, ...]
    format = LabelFormat.BOXES_U


@dataclass(frozen=True)
class BoxesEC:
    """Boxes from extreme clicking: cheaper, noisier, still class-free."""

    boxes: tuple[BoundingBox, ...]
    format = LabelFormat.BOXES_EC


@dataclass(frozen=True)
class Fully:
    """Complete supervision: (box, class) pairs."""

    pairs: tuple[tuple[BoundingBox, int], ...]

    format = LabelFormat.FULLY

    def __post_init__(self) -> None:
        if any(c < 0 for _, c in self.pairs):
            raise ValueError("class ids must be >= 0")

    def boxes_array(self) -> np.ndarray:
        return np.array([b.to_array() for b, _ in self.pairs], dtype=np.float64).reshape(-1, 4)

    def class_ids(self) -> tuple[int, ...]:
        return tuple(c for _, c in self.pairs)


OmniLabel = Union[NoLabel, TagsU, TagsK, PointsU, PointsK, BoxesU, BoxesEC, Fully]


def entity_count(label: OmniLabel) -> int:
    """Number of ground-truth entities G the label pins down (0 for NoLabel;
    TagsU is indeterminate until counts are predicted and reports its tag
    count here)."""
    if isinstance(label, NoLabel):
        return 0
    if isinstance(label, TagsU):
        return len(label.classes)
    if isinstance(label, TagsK):
        return sum(n for _, n in label.pairs)
    if isinstance(label, PointsU):
        return len(label.points)
    if isinstance(label, PointsK):
        return len(label.pairs)
    if isinstance(label, (BoxesU, BoxesEC)):
        return len(label.boxes)
    return len(label.pairs)


# ---------------------------------------------------------------------------
# Extreme-clicking noise.

# Corner offsets are one shared Gaussian draw per box along the outward
# dilation direction: all four coordinates move together, modelling
# systematically tight or loose click placement.
DILATION_SIGNS = np.array([-1.0, -1.0, 1.0, 1.0])

# Absolute amplitude floor (normalized units): click precision does not
# shrink below a few pixels however small the object is.
CORNER_JITTER_FLOOR = 0.04


@dataclass(frozen=True)
class NoiseModel:
    """Gaussian corner noise, amplitude ``sigma_scale * (box side + floor)``.

    ``sigma_scale = 0`` is the exact identity.
    """

    sigma_scale: float
    seed: int = 0

    def __post_init__(self) -> None:
        if not math.isfinite(self.sigma_scale) or self.sigma_scale < 0:
            raise ValueError(f"sigma_scale must be finite and >= 0, got {self.sigma_scale}")


def perturb_boxes(boxes_cxcywh: np.ndarray, sigma_scale: float,
                  rng: np.random.Generator) -> np.ndarray:
    """Apply extreme-clicking noise to a batch of boxes (one draw per box).

    Output corners are re-ordered if crossed, clamped to the unit square,
    and kept at least ``MIN_SIDE`` wide.
    """
    c = np.atleast_2d(np.asarray(boxes_cxcywh, dtype=np.float64))
    xyxy = box_cxcywh_to_xyxy(c)
    w = c[:, 2]
    h = c[:, 3]
    amp = sigma_scale * (np.stack([w, h, w, h], axis=1) + CORNER_JITTER_FLOOR)
    z = rng.standard_normal((c.shape[0], 1))
    out = xyxy + z * DILATION_SIGNS * amp

    x0 = np.minimum(out[:, 0], out[:, 2])
    x1 = np.maximum(out[:, 0], out[:, 2])
    y0 = np.minimum(out[:, 1], out[:, 3])
    y1 = np.maximum(out[:, 1], out[:, 3])
    x0 = np.clip(x0, 0.0, 1.0)
    x1 = np.clip(x1, 0.0, 1.0)
    y0 = np.clip(y0, 0.0, 1.0)
    y1 = np.clip(y1, 0.0, 1.0)
    bad = x1 - x0 < MIN_SIDE
    x1 = np.where(bad, np.minimum(1.0, x0 + MIN_SIDE), x1)
    x0 = np.where(bad, x1 - MIN_SIDE, x0)
    bad = y1 - y0 < MIN_SIDE
    y1 = np.where(bad, np.minimum(1.0, y0 + MIN_SIDE), y1)
    y0 = np.where(bad, y1 - MIN_SIDE, y0)
    return box_xyxy_to_cxcywh(np.stack([x0, y0, x1, y1], axis=1))


def simulate_ec(gt: BoundingBox, noise: NoiseModel) -> BoundingBox:
    """Perturb one box; deterministic for a given (box, noise) pair."""
    if noise.sigma_scale == 0.0:
        return gt
    rng = np.random.default_rng(noise.seed)
    out = perturb_boxes(gt.to_array()[None, :], noise.sigma_scale, rng)[0]
    return BoundingBox(*(float(v) for v in out))


def mean_iou_under_noise(boxes_cxcywh: np.ndarray, sigma_scale: float,
                         z: np.ndarray) -> float:
    """Mean IoU of a box sample against its perturbed copy for fixed draws."""
    c = np.asarray(boxes_cxcywh, dtype=np.float64)
    rng = _FixedDraws(z)
    noisy = perturb_boxes(c, sigma_scale, rng)  # type: ignore[arg-type]
    return float(elementwise_iou(box_cxcywh_to_xyxy(c), box_cxcywh_to_xyxy(noisy)).mean())


class _FixedDraws:
    """Quacks like a Generator but replays a fixed normal sample (common
    random numbers keep the calibration objective monotone in sigma)."""

    def __init__(self, z: np.ndarray) -> None:
        self._z = z

    def standard_normal(self, shape):
        assert tuple(shape) == self._z.shape
        return self._z


def calibrate_ec(target_mean: float, target_std: float,
                 box_sample: Sequence[BoundingBox] | np.ndarray,
                 *, seed: int = 0, iterations: int = 48) -> NoiseModel:
    """Find the noise scale whose mean IoU against ``box_sample`` hits
    ``target_mean``, by bisection (mean IoU decreases monotonically in the
    scale).

    ``target_std`` is not fitted: the spread is a consequence of the noise
    structure; it is accepted here to document the intended operating point.
    """
    if not (0.0 < target_mean < 1.0):
        raise ValueError(f"target mean IoU must be in (0, 1), got {target_mean}")
    if isinstance(box_sample, np.ndarray):
        boxes = np.atleast_2d(np.asarray(box_sample, dtype=np.float64))
    else:
        boxes = np.array([b.to_array() for b in box_sample], dtype=np.float64).reshape(-1, 4)
    if boxes.shape[0] < 1:
        raise ValueError("box sample must be non-empty")

    z = np.random.default_rng(seed).standard_normal((boxes.shape[0], 1))
    lo, hi = 0.0, 1.0
    for _ in range(iterations):
        mid = 0.5 * (lo + hi)
        if mean_iou_under_noise(boxes, mid, z) > target_mean:
            lo = mid
        else:
            hi = mid
    return NoiseModel(sigma_scale=0.5 * (lo + hi), seed=seed)


def sample_natural_boxes(n: int, rng: np.random.Generator, *,
                         min_area: float = 5e-4, max_area: float = 0.8,
                         max_aspect: float = 3.0) -> np.ndarray:
    """A synthetic (n, 4) cxcywh box sample shaped like natural detection
    data: log-uniform areas and aspect ratios, uniform centers, extents
    clipped at the image border."""
    area = np.exp(rng.uniform(np.log(min_area), np.log(max_area), size=n))
    aspect = np.exp(rng.uniform(-np.log(max_aspect), np.log(max_aspect), size=n))
    w = np.sqrt(area * aspect)
    h = np.sqrt(area / aspect)
    cx = rng.uniform(0.0, 1.0, size=n)
    cy = rng.uniform(0.0, 1.0, size=n)
    x0 = np.clip(cx - w / 2, 0.0, 1.0)
    x1 = np.clip(cx + w / 2, 0.0, 1.0)
    y0 = np.clip(cy - h / 2, 0.0, 1.0)
    y1 = np.clip(cy + h / 2, 0.0, 1.0)
    x1 = np.maximum(x1, x0 + MIN_SIDE)
    y1 = np.maximum(y1, y0 + MIN_SIDE)
    return box_xyxy_to_cxcywh(np.stack([x0, y0, x1, y1], axis=1))


# ---------------------------------------------------------------------------
# Downgrading full labels.

def downgrade(full: Fully, target: LabelFormat, seed: int,
              noise: NoiseModel | None = None) -> OmniLabel:
    """Derive a weak label from a full one; deterministic given ``seed``.

    Points are sampled uniformly inside each box.  ``boxes_ec`` requires an
    explicit :class:`NoiseModel`.
    """
    if not isinstance(full, Fully):
        raise TypeError(f"downgrade needs a Fully label, got {type(full).__name__}")
    target = LabelFormat(target)

    if target == LabelFormat.NONE:
        return NoLabel()
    if target == LabelFormat.FULLY:
        return full

    classes = full.class_ids()
    if target == LabelFormat.TAGS_U:
        return TagsU(classes=tuple(sorted(set(classes))))
    if target == LabelFormat.TAGS_K:
        counts: dict[int, int] = {}
        for c in classes:
            counts[c] = counts.get(c, 0) + 1
        return TagsK(pairs=tuple(sorted(counts.items())))

    if target in (LabelFormat.POINTS_U, LabelFormat.POINTS_K):
        rng = np.random.default_rng(seed)
        points = []
        for box, _ in full.pairs:
            x0, y0, x1, y1 = box.to_xyxy()
            u, t = rng.uniform(size=2)
            points.append(Point2D(px=float(x0 + u * (x1 - x0)),
                                  py=float(y0 + t * (y1 - y0))))
        if target == LabelFormat.POINTS_U:
            return PointsU(points=tuple(points))
        return PointsK(pairs=tuple(zip(points, classes)))

    if target == LabelFormat.BOXES_U:
        return BoxesU(boxes=tuple(b for b, _ in full.pairs))

    if target == LabelFormat.BOXES_EC:
        if noise is None:
            raise ValueError("downgrading to boxes_ec requires a NoiseModel")
        if not full.pairs:
            return BoxesEC(boxes=())
        # One stream for the whole image so each box gets its own draw; the
        # downgrade seed governs it, keeping all randomness under one knob.
        rng = np.random.default_rng(seed)
        noisy = perturb_boxes(full.boxes_array(), noise.sigma_scale, rng)
        return BoxesEC(boxes=tuple(BoundingBox(*(float(v) for v in row)) for row in noisy))

    raise ValueError(f"unknown downgrade target {target!r}")
