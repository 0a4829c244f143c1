"""Axis-aligned box and point primitives plus the geometric kernels
(IoU, generalized IoU, L1, center distance, containment) used by every
cost builder.

The canonical box form is normalized center-size ``(cx, cy, w, h)`` on the
unit square; corner and pixel forms exist only at I/O boundaries.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

# Boxes thinner than this (normalized units) are invalid: the GIoU
# enclosing-area division needs a positive-area guarantee.
MIN_SIDE = 1e-6

_EXTENT_TOL = 1e-9


@dataclass(frozen=True)
class BoundingBox:
    """One object's spatial extent in normalized center-size coordinates."""

    cx: float
    cy: float
    w: float
    h: float

    def __post_init__(self) -> None:
        vals = (self.cx, self.cy, self.w, self.h)
        if not all(math.isfinite(v) for v in vals):
            raise ValueError(f"box coordinates must be finite, got {vals}")
        if self.w < MIN_SIDE or self.h < MIN_SIDE:
            raise ValueError(f"degenerate box (w={self.w}, h={self.h}); sides must be >= {MIN_SIDE}")
        if (self.cx - self.w / 2 < -_EXTENT_TOL or self.cx + self.w / 2 > 1 + _EXTENT_TOL
                or self.cy - self.h / 2 < -_EXTENT_TOL or self.cy + self.h / 2 > 1 + _EXTENT_TOL):
            raise ValueError(f"box extent outside the unit square: {vals}")

    @classmethod
    def clamped(cls, cx: float, cy: float, w: float, h: float) -> "BoundingBox":
        """Build a box from possibly out-of-range center-size values by
        clamping its extent to the unit square (ingestion rule).

        Already-valid values pass through bit-identically; the corner
        round trip below would otherwise smear exact coordinates.
        """
        try:
            return cls(cx, cy, w, h)
        except ValueError:
            pass
        x0 = min(max(cx - w / 2, 0.0), 1.0)
        x1 = min(max(cx + w / 2, 0.0), 1.0)
        y0 = min(max(cy - h / 2, 0.0), 1.0)
        y1 = min(max(cy + h / 2, 0.0), 1.0)
        # Assemble center-size directly: deriving the repaired side from
        # corner differences can round to one ulp under MIN_SIDE.
        w = max(x1 - x0, MIN_SIDE)
        h = max(y1 - y0, MIN_SIDE)
        cx = min(max((x0 + x1) / 2, w / 2), 1.0 - w / 2)
        cy = min(max((y0 + y1) / 2, h / 2), 1.0 - h / 2)
        return cls(cx, cy, w, h)

    @classmethod
    def from_xyxy(cls, x0: float, y0: float, x1: float, y1: float) -> "BoundingBox":
        """From normalized corner form (x_min, y_min, x_max, y_max)."""
        return cls((x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0)

    @classmethod
    def from_pixels(cls, x0: float, y0: float, x1: float, y1: float,
                    width: int, height: int) -> "BoundingBox":
        """From corner form in absolute pixels of a ``width x height`` image.

        Out-of-frame extents are clamped; this is the ingestion path.
        """
        if width <= 0 or height <= 0:
            raise ValueError(f"image size must be positive, got {width}x{height}")
        cx = (x0 + x1) / 2 / width
        cy = (y0 + y1) / 2 / height
        return cls.clamped(cx, cy, (x1 - x0) / width, (y1 - y0) / height)

    def to_xyxy(self) -> tuple[float, float, float, float]:
        return (self.cx - self.w / 2, self.cy - self.h / 2,
                self.cx + self.w / 2, self.cy + self.h / 2)

    def to_pixels(self, width: int, height: int) -> tuple[float, float, float, float]:
        """Corner form in absolute pixels."""
        x0, y0, x1, y1 = self.to_xyxy()
        return (x0 * width, y0 * height, x1 * width, y1 * height)

    def to_array(self) -> np.ndarray:
        return np.array([self.cx, self.cy, self.w, self.h], dtype=np.float64)


@dataclass(frozen=True)
class Point2D:
    """A point in normalized image coordinates."""

    px: float
    py: float

    def __post_init__(self) -> None:
        if not (math.isfinite(self.px) and math.isfinite(self.py)):
            raise ValueError(f"point coordinates must be finite, got ({self.px}, {self.py})")
        if not (0.0 <= self.px <= 1.0 and 0.0 <= self.py <= 1.0):
            raise ValueError(f"point outside the unit square: ({self.px}, {self.py})")


# ---------------------------------------------------------------------------
# Array-level conversions and pairwise kernels (float64, shape (N, 4)).

def box_cxcywh_to_xyxy(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    cx, cy, w, h = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack([cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2], axis=-1)


def box_xyxy_to_cxcywh(b: np.ndarray) -> np.ndarray:
    b = np.asarray(b, dtype=np.float64)
    x0, y0, x1, y1 = b[..., 0], b[..., 1], b[..., 2], b[..., 3]
    return np.stack([(x0 + x1) / 2, (y0 + y1) / 2, x1 - x0, y1 - y0], axis=-1)


def pairwise_iou(a_xyxy: np.ndarray, b_xyxy: np.ndarray) -> np.ndarray:
    """IoU between every box of ``a`` (N,4) and every box of ``b`` (M,4)."""
    a = np.asarray(a_xyxy, dtype=np.float64)
    b = np.asarray(b_xyxy, dtype=np.float64)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    lt = np.maximum(a[:, None, :2], b[None, :, :2])
    rb = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    union = area_a[:, None] + area_b[None, :] - inter
    return inter / union


def pairwise_giou(a_xyxy: np.ndarray, b_xyxy: np.ndarray) -> np.ndarray:
    """Generalized IoU: IoU minus the enclosing-box dead-area ratio; in [-1, 1]."""
    a = np.asarray(a_xyxy, dtype=np.float64)
    b = np.asarray(b_xyxy, dtype=np.float64)
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    lt = np.maximum(a[:, None, :2], b[None, :, :2])
    rb = np.minimum(a[:, None, 2:], b[None, :, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[..., 0] * wh[..., 1]
    union = area_a[:, None] + area_b[None, :] - inter
    lt_enc = np.minimum(a[:, None, :2], b[None, :, :2])
    rb_enc = np.maximum(a[:, None, 2:], b[None, :, 2:])
    wh_enc = np.clip(rb_enc - lt_enc, 0.0, None)
    enclose = wh_enc[..., 0] * wh_enc[..., 1]
    return inter / union - (enclose - union) / enclose


def elementwise_iou(a_xyxy: np.ndarray, b_xyxy: np.ndarray) -> np.ndarray:
    """IoU of corresponding rows of two equal-length (N,4) corner arrays."""
    a = np.asarray(a_xyxy, dtype=np.float64)
    b = np.asarray(b_xyxy, dtype=np.float64)
    lt = np.maximum(a[:, :2], b[:, :2])
    rb = np.minimum(a[:, 2:], b[:, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[:, 0] * wh[:, 1]
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    return inter / (area_a + area_b - inter)


def elementwise_giou(a_xyxy: np.ndarray, b_xyxy: np.ndarray) -> np.ndarray:
    """GIoU of corresponding rows of two equal-length (N,4) corner arrays."""
    a = np.asarray(a_xyxy, dtype=np.float64)
    b = np.asarray(b_xyxy, dtype=np.float64)
    lt = np.maximum(a[:, :2], b[:, :2])
    rb = np.minimum(a[:, 2:], b[:, 2:])
    wh = np.clip(rb - lt, 0.0, None)
    inter = wh[:, 0] * wh[:, 1]
    area_a = (a[:, 2] - a[:, 0]) * (a[:, 3] - a[:, 1])
    area_b = (b[:, 2] - b[:, 0]) * (b[:, 3] - b[:, 1])
    union = area_a + area_b - inter
    lt_enc = np.minimum(a[:, :2], b[:, :2])
    rb_enc = np.maximum(a[:, 2:], b[:, 2:])
    wh_enc = np.clip(rb_enc - lt_enc, 0.0, None)
    enclose = wh_enc[:, 0] * wh_enc[:, 1]
    return inter / union - (enclose - union) / enclose


def pairwise_l1(a_cxcywh: np.ndarray, b_cxcywh: np.ndarray) -> np.ndarray:
    """Sum of absolute center-size coordinate differences, all pairs."""
    a = np.asarray(a_cxcywh, dtype=np.float64)
    b = np.asarray(b_cxcywh, dtype=np.float64)
    return np.abs(a[:, None, :] - b[None, :, :]).sum(axis=-1)


# ---------------------------------------------------------------------------
# Scalar operations on the domain types.

def iou(a: BoundingBox, b: BoundingBox) -> float:
    """Intersection over union; symmetric, 1 iff identical, 0 iff disjoint."""
    return float(pairwise_iou(np.array([a.to_xyxy()]), np.array([b.to_xyxy()]))[0, 0])


def giou(a: BoundingBox, b: BoundingBox) -> float:
    return float(pairwise_giou(np.array([a.to_xyxy()]), np.array([b.to_xyxy()]))[0, 0])


def l1_box(a: BoundingBox, b: BoundingBox) -> float:
    """L1 distance between the four center-size coordinates."""
    return (abs(a.cx - b.cx) + abs(a.cy - b.cy)
            + abs(a.w - b.w) + abs(a.h - b.h))


def center_distance(p: Point2D, b: BoundingBox) -> float:
    """Raw Euclidean distance from the point to the box center.

    Min-max normalization over a whole cost matrix happens in the cost
    builder, not here.
    """
    return math.hypot(p.px - b.cx, p.py - b.cy)


def contains(b: BoundingBox, p: Point2D) -> bool:
    """Closed-interval containment: points on the edge count as inside."""
    x0, y0, x1, y1 = b.to_xyxy()
    return (x0 <= p.px <= x1) and (y0 <= p.py <= y1)
