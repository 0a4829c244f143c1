"""Pseudo-label filtering for detection corpora with mixed annotation forms.

The pipeline: full labels can be downgraded into weak ones (tags, points,
class-free boxes of two quality tiers), a teacher's predictions are matched
against whatever annotation an image carries via minimum-cost bipartite
matching, and the resulting pseudo-labels feed student training.  Side
modules cover EMA teacher updates, loss evaluation, annotation-cost
budgeting, and pseudo-label quality reporting.
"""
from ._kernels import backend_name
from .annotation import (BoxesEC, BoxesU, Fully, LabelFormat, NoiseModel,
                         NoLabel, OmniLabel, PointsK, PointsU, TagsK, TagsU,
                         WEAK_FORMATS, calibrate_ec, downgrade, entity_count,
                         perturb_boxes, sample_natural_boxes, simulate_ec)
from .budget import (BUILTIN_STATS, TRAIN_SIZES, DatasetStats, MixturePolicy,
                     cost_per_image, cost_table, enumerate_policies,
                     policy_cost)
from .ema import DEFAULT_EMA_KEEP, ParamVector, ema_step
from .filtering import (FilterConfig, PseudoLabel, PseudoLabelSet, box_cost,
                        filter_image, filter_none, point_cost, point_tag_cost,
                        predict_counts, simple_filter, tag_cost,
                        unified_filter)
from .geometry import (BoundingBox, Point2D, center_distance, contains, giou,
                       iou, l1_box)
from .loss import LossBreakdown, LossConfig, eval_loss
from .matching import BIG, Assignment, CostMatrix, brute_force, hungarian
from .prediction import (DEFAULT_NUM_QUERIES, ScoredPrediction,
                         TeacherPrediction, score)
from .quality import QualityReport, score_pseudo

__version__ = "0.1.0"

__all__ = [
    "BIG", "BUILTIN_STATS", "Assignment", "BoundingBox", "BoxesEC", "BoxesU",
    "CostMatrix", "DEFAULT_EMA_KEEP", "DEFAULT_NUM_QUERIES", "DatasetStats",
    "FilterConfig", "Fully", "LabelFormat", "LossBreakdown", "LossConfig",
    "MixturePolicy", "NoLabel", "NoiseModel", "OmniLabel", "ParamVector",
    "Point2D", "PointsK", "PointsU", "PseudoLabel", "PseudoLabelSet",
    "QualityReport", "ScoredPrediction", "TRAIN_SIZES", "TagsK", "TagsU",
    "TeacherPrediction", "WEAK_FORMATS", "backend_name", "box_cost",
    "brute_force", "calibrate_ec", "center_distance", "contains",
    "cost_per_image", "cost_table", "downgrade", "ema_step",
    "entity_count", "enumerate_policies", "eval_loss", "filter_image",
    "filter_none", "giou", "hungarian", "iou", "l1_box", "perturb_boxes",
    "point_cost", "point_tag_cost", "policy_cost", "predict_counts",
    "sample_natural_boxes", "score", "score_pseudo", "simple_filter",
    "simulate_ec", "tag_cost", "unified_filter",
]
