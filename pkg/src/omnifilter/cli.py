"""Command-line entry point for batch pipeline use.

Exit codes: 0 success, 1 usage error, 2 input/file error, 3 internal
error.  The only environment variable honored is ``OMNIFILTER_LOG_LEVEL``.
"""
from __future__ import annotations

import argparse
import json
import logging
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterable

import numpy as np

from . import io
from .annotation import (LabelFormat, NoiseModel, downgrade, calibrate_ec,
                         perturb_boxes, sample_natural_boxes)
from .budget import (BUILTIN_STATS, TRAIN_SIZES, DatasetStats, cost_table,
                     enumerate_policies, policy_cost)
from .ema import DEFAULT_EMA_KEEP, ema_step
from .filtering import FilterConfig, filter_image
from .geometry import box_cxcywh_to_xyxy, elementwise_iou
from .loss import LossConfig, eval_loss
from .quality import score_pseudo

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_INPUT = 2
EXIT_INTERNAL = 3

log = logging.getLogger("omnifilter")

_COST_ROW = (LabelFormat.TAGS_U, LabelFormat.TAGS_K, LabelFormat.POINTS_U,
             LabelFormat.POINTS_K, LabelFormat.BOXES_EC, LabelFormat.BOXES_U,
             LabelFormat.FULLY)


class UsageError(Exception):
    """Bad flag combination detected after parsing."""


class _Parser(argparse.ArgumentParser):
    # argparse exits with 2 on bad flags; this artifact reserves 2 for input
    # files, so route parse failures to the usage code instead.
    def error(self, message: str):
        self.print_usage(sys.stderr)
        raise UsageError(f"{self.prog}: {message}")


def _setup_logging() -> None:
    level = os.environ.get("OMNIFILTER_LOG_LEVEL", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING),
                        format="%(levelname)s %(name)s: %(message)s")


def _map_images(fn: Callable, keys: Iterable, jobs: int) -> dict:
    keys = list(keys)
    if jobs <= 1:
        return {k: fn(k) for k in keys}
    with ThreadPoolExecutor(max_workers=jobs) as ex:
        return dict(zip(keys, ex.map(fn, keys)))


def _filter_config(args) -> FilterConfig:
    try:
        return FilterConfig(tau=args.tau, gamma=args.gamma,
                            lambda_iou=args.lambda_iou, lambda_l1=args.lambda_l1,
                            strategy=args.strategy,
                            drop_infeasible=args.drop_infeasible)
    except ValueError as e:
        raise UsageError(str(e)) from e


def _stats_from(args) -> DatasetStats:
    if args.stats:
        return io.load_stats(args.stats)
    if args.dataset:
        return BUILTIN_STATS[args.dataset]
    raise UsageError("one of --dataset/--stats is required")


# ---------------------------------------------------------------------------
# Subcommands.

def cmd_filter(args) -> int:
    cfg = _filter_config(args)
    corpus = io.load_coco(args.corpus)
    preds = {p.image_id: p for p in io.load_predictions(args.predictions)}
    labels = io.load_omni(args.labels)
    missing = sorted(set(preds) - set(labels))
    if missing:
        raise io.FileFormatError(f"no omni-label for predicted image(s) {missing}")

    out = _map_images(lambda i: filter_image(preds[i], labels[i], cfg),
                      sorted(preds), args.jobs)
    io.save_pseudo(out, corpus, args.out)
    total = sum(len(s) for s in out.values())
    print(f"filtered {len(out)} image(s) -> {total} pseudo-label(s) ({args.out})")
    return EXIT_OK


def cmd_downgrade(args) -> int:
    try:
        fmt = LabelFormat(args.format)
        noise = None
        if fmt == LabelFormat.BOXES_EC:
            if args.sigma_scale is None:
                raise UsageError("--sigma-scale is required for boxes_ec")
            noise = NoiseModel(sigma_scale=args.sigma_scale, seed=args.seed)
    except ValueError as e:
        raise UsageError(str(e)) from e
    corpus = io.load_coco(args.corpus)

    def one(image_id):
        return downgrade(corpus.label(image_id), fmt,
                         seed=args.seed ^ image_id, noise=noise)

    out = _map_images(one, sorted(im.image_id for im in corpus.images), args.jobs)
    io.save_omni(out, args.out)
    print(f"downgraded {len(out)} image(s) to {fmt.value} ({args.out})")
    return EXIT_OK


def cmd_simulate_ec(args) -> int:
    if args.calibrate:
        rng = np.random.default_rng(args.seed)
        sample = sample_natural_boxes(args.sample_size, rng)
        model = calibrate_ec(args.target_mean, args.target_std, sample,
                             seed=args.seed)
        noisy = perturb_boxes(sample, model.sigma_scale,
                              np.random.default_rng(args.seed + 1))
        ious = elementwise_iou(box_cxcywh_to_xyxy(sample), box_cxcywh_to_xyxy(noisy))
        print(json.dumps({"sigma_scale": model.sigma_scale,
                          "mean_iou": float(ious.mean()),
                          "std_iou": float(ious.std())}))
        return EXIT_OK
    if not (args.corpus and args.out and args.sigma_scale is not None):
        raise UsageError("need --corpus/--out/--sigma-scale (or --calibrate)")
    args.format = LabelFormat.BOXES_EC.value
    return cmd_downgrade(args)


def cmd_cost(args) -> int:
    stats = _stats_from(args)
    table = cost_table(stats)
    print(f"dataset {stats.name} (C={stats.num_classes}, "
          f"C_avg={stats.avg_classes_per_image:g}, "
          f"I_avg={stats.avg_instances_per_image:g})")
    for fmt in _COST_ROW:
        seconds = table[fmt]
        cell = "-" if seconds is None else f"{seconds:.1f}"
        print(f"{fmt.value:<9} {cell:>7}")
    return EXIT_OK


def cmd_budget(args) -> int:
    stats = _stats_from(args)
    size = args.size if args.size else TRAIN_SIZES.get(stats.name)
    if not size:
        raise UsageError(f"no built-in train size for {stats.name!r}; pass --size")
    try:
        formats = [LabelFormat(f.strip()) for f in args.formats.split(",") if f.strip()]
        policies = enumerate_policies(stats, args.hours, formats, args.step,
                                      dataset_size=size)
    except ValueError as e:
        raise UsageError(str(e)) from e
    print(f"{len(policies)} affordable polic(ies) at {args.hours:g} h "
          f"(size {size}, step {args.step:g}); showing {min(args.limit, len(policies))}")
    for p in policies[:args.limit]:
        mix = " ".join(f"{fmt.value}={frac * 100:g}%"
                       for fmt, frac in p.fractions.items())
        print(f"{policy_cost(p, stats):10.2f}h  {mix}")
    return EXIT_OK


def cmd_eval(args) -> int:
    corpus = io.load_coco(args.corpus)
    pseudo = io.load_pseudo(args.pseudo)
    tp = fp = fn = 0
    iou_sum = 0.0
    for image_id in sorted(pseudo):
        report = score_pseudo(pseudo[image_id], corpus.label(image_id),
                              args.iou_thresh)
        tp += report.tp
        fp += report.fp
        fn += report.fn
        iou_sum += report.mean_iou_matched * report.tp
    precision = tp / (tp + fp) if tp + fp else 1.0
    recall = tp / (tp + fn) if tp + fn else 1.0
    mean_iou = iou_sum / tp if tp else 0.0
    print(f"images {len(pseudo)}  tp {tp}  fp {fp}  fn {fn}")
    print(f"precision {precision:.4f}  recall {recall:.4f}  "
          f"mean_iou_matched {mean_iou:.4f}")
    return EXIT_OK


def cmd_eval_loss(args) -> int:
    try:
        cfg = LossConfig(alpha=args.alpha, beta=args.beta,
                         lambda_iou=args.lambda_iou, lambda_l1=args.lambda_l1)
    except ValueError as e:
        raise UsageError(str(e)) from e
    corpus = io.load_coco(args.corpus)
    preds = io.load_predictions(args.predictions)
    if not preds:
        raise io.FileFormatError(f"{args.predictions}: no predictions")
    cls = box = total = 0.0
    for p in sorted(preds, key=lambda p: p.image_id):
        breakdown = eval_loss(p, corpus.label(p.image_id).pairs, cfg)
        cls += breakdown.cls
        box += breakdown.box
        total += breakdown.total
    n = len(preds)
    print(f"images {n}  cls {cls / n:.6f}  box {box / n:.6f}  total {total / n:.6f}")
    return EXIT_OK


def cmd_ema(args) -> int:
    if not (0.0 <= args.decay <= 1.0):
        raise UsageError(f"--decay must lie in [0, 1], got {args.decay}")
    if args.steps < 1:
        raise UsageError(f"--steps must be >= 1, got {args.steps}")
    teacher = io.load_params(args.teacher)
    student = io.load_params(args.student)
    for _ in range(args.steps):
        teacher = ema_step(teacher, student, args.decay)
    io.save_params(teacher, args.out)
    print(f"teacher updated to version {teacher.version} "
          f"({len(teacher)} parameters, {args.out})")
    return EXIT_OK


# ---------------------------------------------------------------------------
# Parser wiring.

def _add_filter_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--tau", type=float, default=0.7,
                   help="confidence threshold (default 0.7)")
    p.add_argument("--gamma", type=float, default=0.5,
                   help="point/tag cost trade-off (default 0.5)")
    p.add_argument("--lambda-iou", type=float, default=2.0, dest="lambda_iou")
    p.add_argument("--lambda-l1", type=float, default=5.0, dest="lambda_l1")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="omnifilter",
                     description="Pseudo-label filtering for weakly annotated "
                                 "detection corpora.")
    sub = parser.add_subparsers(dest="subcommand", required=True)

    p = sub.add_parser("filter", help="turn predictions + weak labels into pseudo-labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--labels", required=True, help="omni-label JSON")
    p.add_argument("--corpus", required=True, help="COCO-style corpus JSON")
    p.add_argument("--out", required=True)
    p.add_argument("--strategy", choices=["unified", "simple"], default="unified")
    _add_filter_flags(p)
    p.add_argument("--drop-infeasible", action="store_true", dest="drop_infeasible")
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_filter)

    p = sub.add_parser("downgrade", help="derive weak labels from a full corpus")
    p.add_argument("--corpus", required=True)
    p.add_argument("--format", required=True,
                   choices=[f.value for f in LabelFormat])
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--sigma-scale", type=float, default=None, dest="sigma_scale",
                   help="noise scale (required for boxes_ec)")
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_downgrade)

    p = sub.add_parser("simulate-ec", help="apply or calibrate box-corner noise")
    p.add_argument("--corpus")
    p.add_argument("--out")
    p.add_argument("--sigma-scale", type=float, default=None, dest="sigma_scale")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--jobs", type=int, default=1)
    p.add_argument("--calibrate", action="store_true",
                   help="search the scale hitting --target-mean instead")
    p.add_argument("--target-mean", type=float, default=0.82, dest="target_mean")
    p.add_argument("--target-std", type=float, default=0.16, dest="target_std")
    p.add_argument("--sample-size", type=int, default=10000, dest="sample_size")
    p.set_defaults(func=cmd_simulate_ec)

    p = sub.add_parser("cost", help="per-image annotation cost of every format")
    p.add_argument("--dataset", choices=sorted(BUILTIN_STATS))
    p.add_argument("--stats", help="stats JSON {name, C, C_avg, I_avg}")
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("budget", help="enumerate mixture policies under a budget")
    p.add_argument("--dataset", choices=sorted(BUILTIN_STATS))
    p.add_argument("--stats")
    p.add_argument("--hours", type=float, required=True)
    p.add_argument("--step", type=float, default=0.01)
    p.add_argument("--formats", default="fully,tags_k,boxes_ec",
                   help="comma-separated formats in the mixture grid")
    p.add_argument("--size", type=int, default=None,
                   help="dataset size (defaults to the built-in train split)")
    p.add_argument("--limit", type=int, default=20)
    p.set_defaults(func=cmd_budget)

    p = sub.add_parser("eval", help="pseudo-label precision/recall vs full labels")
    p.add_argument("--pseudo", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--iou-thresh", type=float, default=0.5, dest="iou_thresh")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("eval-loss", help="training-loss breakdown vs full labels")
    p.add_argument("--predictions", required=True)
    p.add_argument("--corpus", required=True)
    p.add_argument("--alpha", type=float, default=2.0)
    p.add_argument("--beta", type=float, default=5.0)
    p.add_argument("--lambda-iou", type=float, default=2.0, dest="lambda_iou")
    p.add_argument("--lambda-l1", type=float, default=5.0, dest="lambda_l1")
    p.set_defaults(func=cmd_eval_loss)

    p = sub.add_parser("ema", help="apply EMA steps to a parameter snapshot")
    p.add_argument("--teacher", required=True)
    p.add_argument("--student", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--decay", type=float, default=DEFAULT_EMA_KEEP)
    p.add_argument("--steps", type=int, default=1)
    p.set_defaults(func=cmd_ema)

    return parser


def main(argv=None) -> int:
    _setup_logging()
    try:
        args = build_parser().parse_args(argv)
        return args.func(args)
    except UsageError as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_USAGE
    except (io.FileFormatError, OSError, KeyError, ValueError) as e:
        print(f"error: {e}", file=sys.stderr)
        return EXIT_INPUT
    except Exception as e:  # pragma: no cover - defensive
        log.exception("internal error")
        print(f"internal error: {e}", file=sys.stderr)
        return EXIT_INTERNAL


if __name__ == "__main__":
    sys.exit(main())
