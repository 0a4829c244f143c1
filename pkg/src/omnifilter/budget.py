"""Annotation-time cost model and mixture-policy budget planning.

Per-image annotation effort in seconds for every label format, derived
from per-action timings (tagging a category, clicking a point, drawing a
box carefully or by extreme clicking), plus a planner that enumerates
mixture policies fitting a given budget.
"""
from __future__ import annotations

import math
from dataclasses import dataclass
from types import MappingProxyType
from typing import Iterable, Mapping

from .annotation import LabelFormat

# Per-action timings, seconds.
TAG_SECONDS = 1.0              # confirm presence/absence of one category
POINT_SECONDS = 0.9            # click one instance
VERIFY_AND_POINT_SECONDS = 2.4  # first instance of a present class: verify + click
EC_BOX_SECONDS = 7.0           # one extreme-clicking box
BOX_SECONDS = 35.0             # one carefully drawn box
# Counting instances of the single class is assumed slightly cheaper than
# pointing at each of them.
SINGLE_CLASS_COUNT_FACTOR = 0.95


@dataclass(frozen=True)
class DatasetStats:
    """What the cost model needs to know about a dataset."""

    name: str
    num_classes: int
    avg_classes_per_image: float
    avg_instances_per_image: float

    def __post_init__(self) -> None:
        if self.num_classes < 1:
            raise ValueError(f"num_classes must be >= 1, got {self.num_classes}")
        if not 0 < self.avg_classes_per_image <= self.num_classes:
            raise ValueError(f"avg classes/image must lie in (0, {self.num_classes}], "
                             f"got {self.avg_classes_per_image}")
        if self.avg_instances_per_image < self.avg_classes_per_image:
            raise ValueError("avg instances/image cannot be below avg classes/image")

    @property
    def single_class(self) -> bool:
        return self.num_classes == 1


BUILTIN_STATS: Mapping[str, DatasetStats] = MappingProxyType({
    "voc": DatasetStats("voc", 20, 1.4, 2.4),
    "coco": DatasetStats("coco", 80, 3.5, 7.7),
    "objects365": DatasetStats("objects365", 365, 5.0, 15.8),
    "bees": DatasetStats("bees", 1, 1.0, 7.14),
    "crowdhuman": DatasetStats("crowdhuman", 1, 1.0, 22.64),
})

# Training-split sizes used by the budget planner examples.
TRAIN_SIZES: Mapping[str, int] = MappingProxyType({
    "voc": 22136,
    "coco": 118287,
    "objects365": 93455,
    "bees": 3596,
    "crowdhuman": 15000,
})


def cost_per_image(stats: DatasetStats, fmt: LabelFormat) -> float:
    """Average seconds to annotate one image in the given format.

    Multi-class datasets pay a sweep over absent categories where class
    identity must be established (tags, tagged points, full supervision);
    single-class datasets skip it.
    """
    fmt = LabelFormat(fmt)
    c = float(stats.num_classes)
    c_avg = stats.avg_classes_per_image
    i_avg = stats.avg_instances_per_image

    if fmt == LabelFormat.NONE:
        return 0.0
    if fmt == LabelFormat.TAGS_U:
        if stats.single_class:
            raise ValueError("untagged counts carry no information on a "
                             "single-class dataset; tags_u is not defined there")
        return TAG_SECONDS * c
    if fmt == LabelFormat.POINTS_U:
        return POINT_SECONDS * i_avg
    if fmt == LabelFormat.POINTS_K:
        if stats.single_class:
            return cost_per_image(stats, LabelFormat.POINTS_U)
        return (c - c_avg) * TAG_SECONDS + VERIFY_AND_POINT_SECONDS * c_avg \
            + POINT_SECONDS * (i_avg - c_avg)
    if fmt == LabelFormat.TAGS_K:
        if stats.single_class:
            return SINGLE_CLASS_COUNT_FACTOR * cost_per_image(stats, LabelFormat.POINTS_K)
        return TAG_SECONDS * c + (i_avg - c_avg)
    if fmt == LabelFormat.BOXES_EC:
        return EC_BOX_SECONDS * i_avg
    if fmt == LabelFormat.BOXES_U:
        return BOX_SECONDS * i_avg
    if fmt == LabelFormat.FULLY:
        if stats.single_class:
            return BOX_SECONDS * i_avg
        return (c - c_avg) * TAG_SECONDS + BOX_SECONDS * i_avg
    raise ValueError(f"unknown format {fmt!r}")


def cost_table(stats: DatasetStats) -> dict[LabelFormat, float | None]:
    """Per-image cost of every format (None where a format is undefined)."""
    out: dict[LabelFormat, float | None] = {}
    for fmt in LabelFormat:
        try:
            out[fmt] = cost_per_image(stats, fmt)
        except ValueError:
            out[fmt] = None
    return out


@dataclass(frozen=True)
class MixturePolicy:
    """How a dataset's images are split across annotation formats."""

    fractions: Mapping[LabelFormat, float]
    dataset_size: int

    def __post_init__(self) -> None:
        fr = {LabelFormat(f): float(v) for f, v in dict(self.fractions).items()}
        for f, v in fr.items():
            if not (math.isfinite(v) and 0.0 <= v <= 1.0):
                raise ValueError(f"fraction for {f.value} must lie in [0, 1], got {v}")
        total = sum(fr.values())
        if abs(total - 1.0) > 1e-6:
            raise ValueError(f"fractions must sum to 1, got {total}")
        if self.dataset_size < 1:
            raise ValueError(f"dataset_size must be >= 1, got {self.dataset_size}")
        object.__setattr__(self, "fractions", MappingProxyType(fr))

    def fraction(self, fmt: LabelFormat) -> float:
        return self.fractions.get(LabelFormat(fmt), 0.0)


def policy_cost(policy: MixturePolicy, stats: DatasetStats) -> float:
    """Total annotation effort of the policy in hours (full precision; any
    rounding is the caller's presentation concern)."""
    seconds = sum(policy.dataset_size * frac * cost_per_image(stats, fmt)
                  for fmt, frac in policy.fractions.items())
    return seconds / 3600.0


def _compositions(total: int, parts: int):
    if parts == 1:
        yield (total,)
        return
    for first in range(total + 1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


MAX_GRID_POLICIES = 2_000_000


def enumerate_policies(stats: DatasetStats, budget_hours: float,
                       formats: Iterable[LabelFormat], step: float,
                       *, dataset_size: int, slack: float = 0.01) -> list[MixturePolicy]:
    """All grid-mixture policies affordable within ``budget_hours``.

    The grid assigns each format a multiple of ``step`` (which must divide
    1); the zero-cost no-annotation format is always available to absorb
    the remainder.  Policies within ``slack`` (relative) of the budget
    count as affordable.  Sorted by descending fully-supervised fraction,
    then by the fraction vector for determinism.
    """
    fmts = list(dict.fromkeys(LabelFormat(f) for f in formats))
    if not fmts:
        raise ValueError("need at least one format")
    if LabelFormat.NONE not in fmts:
        fmts.append(LabelFormat.NONE)
    if budget_hours < 0:
        raise ValueError(f"budget must be >= 0, got {budget_hours}")
    units = round(1.0 / step)
    if units < 1 or abs(step * units - 1.0) > 1e-9:
        raise ValueError(f"step must divide 1 exactly, got {step}")
    n_grid = math.comb(units + len(fmts) - 1, len(fmts) - 1)
    if n_grid > MAX_GRID_POLICIES:
        raise ValueError(f"grid of {n_grid} policies exceeds the "
                         f"{MAX_GRID_POLICIES} enumeration guard; coarsen step")

    per_unit_hours = [dataset_size * step * cost_per_image(stats, f) / 3600.0
                      for f in fmts]
    limit = budget_hours * (1.0 + slack)
    out = []
    for counts in _compositions(units, len(fmts)):
        cost = sum(n * h for n, h in zip(counts, per_unit_hours))
        if cost <= limit:
            out.append(MixturePolicy(
                fractions={f: n * step for f, n in zip(fmts, counts) if n},
                dataset_size=dataset_size))
    out.sort(key=lambda p: (-p.fraction(LabelFormat.FULLY),
                            tuple(-p.fraction(f) for f in fmts)))
    return out
