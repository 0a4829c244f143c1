"""File codecs shared by the pipeline and the CLI.

Five formats: COCO-style corpus JSON, prediction JSONL (one image per
line, streamable), omni-label JSON, dataset-stats JSON, and parameter
snapshots.  Writers are deterministic — fixed key order, records sorted by
image id, floats serialized via ``repr`` so they round-trip exactly — and
every emitted file carries a format version.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from pathlib import Path
from types import MappingProxyType
from typing import Iterable, Mapping, Sequence

import numpy as np

from .annotation import (BoxesEC, BoxesU, Fully, LabelFormat, NoLabel,
                         OmniLabel, PointsK, PointsU, TagsK, TagsU)
from .budget import DatasetStats
from .ema import ParamVector
from .filtering import PseudoLabel, PseudoLabelSet
from .geometry import BoundingBox, Point2D
from .prediction import TeacherPrediction

FORMAT_VERSION = 1


class FileFormatError(ValueError):
    """A file failed validation; ``errors`` lists every bad record."""

    def __init__(self, message: str, errors: Sequence[str] = ()) -> None:
        self.errors = tuple(errors)
        if self.errors:
            message = message + "\n  - " + "\n  - ".join(self.errors)
        super().__init__(message)


def _write_json(obj, path) -> None:
    Path(path).write_text(json.dumps(obj, indent=2) + "\n", encoding="utf-8")


def _read_json(path):
    try:
        return json.loads(Path(path).read_text(encoding="utf-8"))
    except json.JSONDecodeError as e:
        raise FileFormatError(f"{path}: not valid JSON ({e})") from e


def _require(mapping, key, where: str):
    if not isinstance(mapping, dict) or key not in mapping:
        raise FileFormatError(f"{where}: missing key {key!r}")
    return mapping[key]


# ---------------------------------------------------------------------------
# Corpus (COCO-style annotation JSON).

@dataclass(frozen=True)
class ImageInfo:
    image_id: int
    width: int
    height: int

    def __post_init__(self) -> None:
        if self.width < 1 or self.height < 1:
            raise ValueError(f"image {self.image_id}: size must be positive, "
                             f"got {self.width}x{self.height}")


@dataclass(frozen=True)
class Corpus:
    """Images, a category-id → dense-class-index table, and full labels."""

    images: tuple[ImageInfo, ...]
    category_table: Mapping[int, int]
    annotations: Mapping[int, Fully]

    def __post_init__(self) -> None:
        table = dict(self.category_table)
        if sorted(table.values()) != list(range(len(table))):
            raise ValueError("dense class indices must be contiguous from 0")
        ids = [im.image_id for im in self.images]
        if len(set(ids)) != len(ids):
            raise ValueError("duplicate image ids")
        known = set(ids)
        for image_id in self.annotations:
            if image_id not in known:
                raise ValueError(f"annotations reference unknown image id {image_id}")
        object.__setattr__(self, "images", tuple(self.images))
        object.__setattr__(self, "category_table", MappingProxyType(table))
        object.__setattr__(self, "annotations", MappingProxyType(dict(self.annotations)))

    @property
    def num_classes(self) -> int:
        return len(self.category_table)

    def image(self, image_id: int) -> ImageInfo:
        for im in self.images:
            if im.image_id == image_id:
                return im
        raise KeyError(image_id)

    def class_to_category(self) -> dict[int, int]:
        return {dense: cid for cid, dense in self.category_table.items()}

    def label(self, image_id: int) -> Fully:
        return self.annotations.get(image_id, Fully(pairs=()))


def load_coco(path) -> Corpus:
    """Parse a COCO-style file; pixel boxes become normalized center-size.

    All malformed records (bad extents, dangling references) are collected
    and reported together.
    """
    data = _read_json(path)
    images_raw = _require(data, "images", str(path))
    anns_raw = _require(data, "annotations", str(path))
    cats_raw = _require(data, "categories", str(path))

    images = tuple(ImageInfo(image_id=int(_require(im, "id", f"{path}: image {i}")),
                             width=int(_require(im, "width", f"{path}: image {i}")),
                             height=int(_require(im, "height", f"{path}: image {i}")))
                   for i, im in enumerate(images_raw))
    by_id = {im.image_id: im for im in images}
    cat_ids = sorted(int(_require(c, "id", f"{path}: category {i}"))
                     for i, c in enumerate(cats_raw))
    table = {cid: dense for dense, cid in enumerate(cat_ids)}

    errors: list[str] = []
    pairs: dict[int, list[tuple[BoundingBox, int]]] = {im.image_id: [] for im in images}
    for i, ann in enumerate(anns_raw):
        where = f"annotation {i}"
        try:
            image_id = int(_require(ann, "image_id", where))
            cat_id = int(_require(ann, "category_id", where))
            bbox = _require(ann, "bbox", where)
        except FileFormatError as e:
            errors.append(str(e))
            continue
        if image_id not in by_id:
            errors.append(f"{where}: unknown image_id {image_id}")
            continue
        if cat_id not in table:
            errors.append(f"{where}: unknown category_id {cat_id}")
            continue
        if len(bbox) != 4:
            errors.append(f"{where}: bbox must have 4 entries, got {len(bbox)}")
            continue
        x, y, w, h = (float(v) for v in bbox)
        if w <= 0 or h <= 0:
            errors.append(f"{where}: non-positive extent {w}x{h}")
            continue
        im = by_id[image_id]
        pairs[image_id].append(
            (BoundingBox.from_pixels(x, y, x + w, y + h, im.width, im.height),
             table[cat_id]))
    if errors:
        raise FileFormatError(f"{path}: {len(errors)} bad record(s)", errors)

    return Corpus(images=images, category_table=table,
                  annotations={i: Fully(pairs=tuple(p)) for i, p in pairs.items()})


def _image_records(corpus: Corpus) -> list[dict]:
    return [{"id": im.image_id, "width": im.width, "height": im.height}
            for im in sorted(corpus.images, key=lambda im: im.image_id)]


def _category_records(corpus: Corpus) -> list[dict]:
    return [{"id": cid, "name": f"category_{cid}"}
            for cid in sorted(corpus.category_table)]


def save_coco(corpus: Corpus, path) -> None:
    """Inverse of :func:`load_coco`; boxes re-emitted as pixel [x,y,w,h]."""
    inverse = corpus.class_to_category()
    annotations = []
    for im in sorted(corpus.images, key=lambda im: im.image_id):
        for box, dense in corpus.label(im.image_id).pairs:
            x0, y0, x1, y1 = box.to_pixels(im.width, im.height)
            annotations.append({
                "id": len(annotations) + 1,
                "image_id": im.image_id,
                "category_id": inverse[dense],
                "bbox": [x0, y0, x1 - x0, y1 - y0],
            })
    _write_json({"version": FORMAT_VERSION,
                 "images": _image_records(corpus),
                 "annotations": annotations,
                 "categories": _category_records(corpus)}, path)


# ---------------------------------------------------------------------------
# Predictions (JSONL, one image per line).

def save_predictions(preds: Iterable[TeacherPrediction], path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        for p in preds:
            record = {"version": FORMAT_VERSION,
                      "image_id": p.image_id,
                      "K": p.num_queries,
                      "C": p.num_classes,
                      "logits": p.logits.tolist(),
                      "boxes_cxcywh": p.boxes.tolist()}
            f.write(json.dumps(record, separators=(",", ":")) + "\n")


def load_predictions(path) -> list[TeacherPrediction]:
    out = []
    with open(path, "r", encoding="utf-8") as f:
        for lineno, line in enumerate(f, start=1):
            line = line.strip()
            if not line:
                continue
            where = f"{path}:{lineno}"
            try:
                rec = json.loads(line)
            except json.JSONDecodeError as e:
                raise FileFormatError(f"{where}: not valid JSON ({e})") from e
            pred = TeacherPrediction(
                image_id=_require(rec, "image_id", where),
                logits=np.array(_require(rec, "logits", where), dtype=np.float64),
                boxes=np.array(_require(rec, "boxes_cxcywh", where), dtype=np.float64))
            if pred.num_queries != int(rec.get("K", pred.num_queries)) \
                    or pred.num_classes != int(rec.get("C", pred.num_classes)):
                raise FileFormatError(f"{where}: K/C fields disagree with array shapes")
            out.append(pred)
    return out


# ---------------------------------------------------------------------------
# Omni-labels.

def _omni_payload(label: OmniLabel) -> dict:
    if isinstance(label, NoLabel):
        return {}
    if isinstance(label, TagsU):
        return {"classes": [int(c) for c in label.classes]}
    if isinstance(label, TagsK):
        return {"pairs": [[int(c), int(n)] for c, n in label.pairs]}
    if isinstance(label, PointsU):
        return {"points": [[p.px, p.py] for p in label.points]}
    if isinstance(label, PointsK):
        return {"pairs": [[[p.px, p.py], int(c)] for p, c in label.pairs]}
    if isinstance(label, (BoxesU, BoxesEC)):
        return {"boxes": [[b.cx, b.cy, b.w, b.h] for b in label.boxes]}
    if isinstance(label, Fully):
        return {"pairs": [[[b.cx, b.cy, b.w, b.h], int(c)] for b, c in label.pairs]}
    raise TypeError(f"unsupported label type {type(label).__name__}")


def _omni_from_payload(fmt: LabelFormat, payload: dict, where: str) -> OmniLabel:
    try:
        if fmt == LabelFormat.NONE:
            return NoLabel()
        if fmt == LabelFormat.TAGS_U:
            return TagsU(classes=tuple(int(c) for c in payload["classes"]))
        if fmt == LabelFormat.TAGS_K:
            return TagsK(pairs=tuple((int(c), int(n)) for c, n in payload["pairs"]))
        if fmt == LabelFormat.POINTS_U:
            return PointsU(points=tuple(Point2D(float(x), float(y))
                                        for x, y in payload["points"]))
        if fmt == LabelFormat.POINTS_K:
            return PointsK(pairs=tuple((Point2D(float(x), float(y)), int(c))
                                       for (x, y), c in payload["pairs"]))
        if fmt in (LabelFormat.BOXES_U, LabelFormat.BOXES_EC):
            boxes = tuple(BoundingBox(*(float(v) for v in b)) for b in payload["boxes"])
            return BoxesU(boxes=boxes) if fmt == LabelFormat.BOXES_U else BoxesEC(boxes=boxes)
        if fmt == LabelFormat.FULLY:
            return Fully(pairs=tuple((BoundingBox(*(float(v) for v in b)), int(c))
                                     for b, c in payload["pairs"]))
    except (KeyError, TypeError, ValueError) as e:
        raise FileFormatError(f"{where}: bad {fmt.value} payload ({e})") from e
    raise FileFormatError(f"{where}: unknown format {fmt!r}")


def save_omni(labels: Mapping[int, OmniLabel], path) -> None:
    records = [{"image_id": image_id,
                "format": labels[image_id].format.value,
                "payload": _omni_payload(labels[image_id])}
               for image_id in sorted(labels)]
    _write_json({"version": FORMAT_VERSION, "labels": records}, path)


def load_omni(path) -> dict[int, OmniLabel]:
    data = _read_json(path)
    out: dict[int, OmniLabel] = {}
    for i, rec in enumerate(_require(data, "labels", str(path))):
        where = f"{path}: label {i}"
        image_id = int(_require(rec, "image_id", where))
        try:
            fmt = LabelFormat(_require(rec, "format", where))
        except ValueError as e:
            raise FileFormatError(f"{where}: {e}") from e
        if image_id in out:
            raise FileFormatError(f"{where}: duplicate image_id {image_id}")
        out[image_id] = _omni_from_payload(fmt, _require(rec, "payload", where), where)
    return out


# ---------------------------------------------------------------------------
# Pseudo-labels (COCO-compatible, with score/source_query extensions).

def save_pseudo(pseudo: Mapping[int, PseudoLabelSet], corpus: Corpus, path) -> None:
    """COCO-style output; ``bbox`` is pixels for interoperability while
    ``bbox_norm`` preserves the exact normalized coordinates."""
    inverse = corpus.class_to_category()
    known = {im.image_id for im in corpus.images}
    unknown = sorted(set(pseudo) - known)
    if unknown:
        raise FileFormatError(f"pseudo-labels reference unknown image ids {unknown}")
    annotations = []
    for image_id in sorted(pseudo):
        im = corpus.image(image_id)
        for it in pseudo[image_id]:
            x0, y0, x1, y1 = it.box.to_pixels(im.width, im.height)
            annotations.append({
                "id": len(annotations) + 1,
                "image_id": image_id,
                "category_id": inverse[it.class_id],
                "bbox": [x0, y0, x1 - x0, y1 - y0],
                "bbox_norm": [it.box.cx, it.box.cy, it.box.w, it.box.h],
                "score": it.score,
                "source_query": it.source_query,
                "matched_cost": it.matched_cost,
                "infeasible": it.infeasible,
            })
    _write_json({"version": FORMAT_VERSION,
                 "images": _image_records(corpus),
                 "annotations": annotations,
                 "categories": _category_records(corpus)}, path)


def load_pseudo(path) -> dict[int, PseudoLabelSet]:
    """Rebuild pseudo-label sets from a file written by :func:`save_pseudo`
    (exact: boxes come from ``bbox_norm``).  Self-contained — the category
    table is taken from the file itself."""
    data = _read_json(path)
    cat_ids = sorted(int(_require(c, "id", f"{path}: category {i}"))
                     for i, c in enumerate(_require(data, "categories", str(path))))
    table = {cid: dense for dense, cid in enumerate(cat_ids)}
    image_ids = [int(_require(im, "id", f"{path}: image {i}"))
                 for i, im in enumerate(_require(data, "images", str(path)))]

    items: dict[int, list[PseudoLabel]] = {i: [] for i in image_ids}
    for i, ann in enumerate(_require(data, "annotations", str(path))):
        where = f"{path}: annotation {i}"
        image_id = int(_require(ann, "image_id", where))
        if image_id not in items:
            raise FileFormatError(f"{where}: unknown image_id {image_id}")
        cat_id = int(_require(ann, "category_id", where))
        if cat_id not in table:
            raise FileFormatError(f"{where}: unknown category_id {cat_id}")
        box = BoundingBox(*(float(v) for v in _require(ann, "bbox_norm", where)))
        items[image_id].append(PseudoLabel(
            box=box, class_id=table[cat_id],
            score=float(_require(ann, "score", where)),
            source_query=int(_require(ann, "source_query", where)),
            matched_cost=float(ann.get("matched_cost", 0.0)),
            infeasible=bool(ann.get("infeasible", False))))
    return {image_id: PseudoLabelSet(items=tuple(lst)) for image_id, lst in items.items()}


# ---------------------------------------------------------------------------
# Dataset stats and parameter snapshots.

def save_stats(stats: DatasetStats, path) -> None:
    _write_json({"version": FORMAT_VERSION, "name": stats.name,
                 "C": stats.num_classes, "C_avg": stats.avg_classes_per_image,
                 "I_avg": stats.avg_instances_per_image}, path)


def load_stats(path) -> DatasetStats:
    data = _read_json(path)
    return DatasetStats(name=str(_require(data, "name", str(path))),
                        num_classes=int(_require(data, "C", str(path))),
                        avg_classes_per_image=float(_require(data, "C_avg", str(path))),
                        avg_instances_per_image=float(_require(data, "I_avg", str(path))))


def save_params(vec: ParamVector, path) -> None:
    _write_json({"version": FORMAT_VERSION, "param_version": vec.version,
                 "values": vec.values.tolist()}, path)


def load_params(path) -> ParamVector:
    data = _read_json(path)
    return ParamVector(values=np.array(_require(data, "values", str(path)),
                                       dtype=np.float64),
                       version=int(_require(data, "param_version", str(path))))
