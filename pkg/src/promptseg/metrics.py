"""Instance segmentation metrics: Dice, IoU, matched segmentation accuracy.

Segmentation accuracy (SA) at threshold tau is TP / (TP + FP + FN) where
matches are one-to-one prediction/ground-truth pairs with IoU strictly
greater than tau. At tau >= 0.5 a prediction can exceed the threshold with
at most one ground-truth instance, so greedy matching by descending IoU is
optimal.
"""

from __future__ import annotations

import io
from dataclasses import dataclass, field

import numpy as np

from . import grid
from .errors import DimensionMismatch, EmptyInput


def _check_dims(a: np.ndarray, b: np.ndarray):
    if a.shape != b.shape:
        raise DimensionMismatch(f"shape mismatch: {a.shape} vs {b.shape}")


def dice(pred: np.ndarray, gt: np.ndarray) -> float:
    """2|A∩B| / (|A|+|B|); 1.0 when both masks are empty."""
    pred = grid.as_mask(pred)
    gt = grid.as_mask(gt)
    _check_dims(pred, gt)
    total = int(pred.sum()) + int(gt.sum())
    if total == 0:
        return 1.0
    return 2.0 * int((pred & gt).sum()) / total


def iou(pred: np.ndarray, gt: np.ndarray) -> float:
    """|A∩B| / |A∪B|; 1.0 when both masks are empty."""
    pred = grid.as_mask(pred)
    gt = grid.as_mask(gt)
    _check_dims(pred, gt)
    union = int((pred | gt).sum())
    if union == 0:
        return 1.0
    return int((pred & gt).sum()) / union


@dataclass(frozen=True)
class InstanceMatch:
    gt_id: int
    pred_id: int
    iou: float


def _pairwise_iou(pred: np.ndarray, gt: np.ndarray):
    """IoU for every (gt_id, pred_id) pair with non-zero intersection."""
    gt_ids = grid.instance_ids(gt)
    pred_ids = grid.instance_ids(pred)
    gt_areas = {g: int((gt == g).sum()) for g in gt_ids}
    pred_areas = {p: int((pred == p).sum()) for p in pred_ids}
    pairs = {}
    overlap = (gt != 0) & (pred != 0)
    for g, p in zip(gt[overlap].ravel(), pred[overlap].ravel()):
        pairs[(int(g), int(p))] = pairs.get((int(g), int(p)), 0) + 1
    out = []
    for (g, p), inter in pairs.items():
        out.append((g, p, inter / (gt_areas[g] + pred_areas[p] - inter)))
    return out, gt_ids, pred_ids


def match_instances(
    pred: np.ndarray, gt: np.ndarray, threshold: float = 0.5
) -> list[InstanceMatch]:
    """Greedy one-to-one matching by descending IoU; matches require IoU > threshold."""
    pred = np.asarray(pred)
    gt = np.asarray(gt)
    _check_dims(pred, gt)
    if not (0.5 <= threshold < 1):
        raise ValueError("threshold must be in [0.5, 1)")
    candidates, _, _ = _pairwise_iou(pred, gt)
    candidates = [c for c in candidates if c[2] > threshold]
    # descending IoU, ids as deterministic tie-breakers
    candidates.sort(key=lambda c: (-c[2], c[0], c[1]))
    used_gt, used_pred = set(), set()
    matches = []
    for g, p, v in candidates:
        if g in used_gt or p in used_pred:
            continue
        used_gt.add(g)
        used_pred.add(p)
        matches.append(InstanceMatch(gt_id=g, pred_id=p, iou=v))
    return matches


def segmentation_accuracy(
    pred: np.ndarray, gt: np.ndarray, threshold: float = 0.5
) -> tuple[float, int, int, int]:
    """Returns (SA, TP, FP, FN); SA = 1.0 for two empty maps."""
    matches = match_instances(pred, gt, threshold)
    tp = len(matches)
    fp = len(grid.instance_ids(pred)) - tp
    fn = len(grid.instance_ids(gt)) - tp
    denom = tp + fp + fn
    sa = 1.0 if denom == 0 else tp / denom
    return sa, tp, fp, fn


def evaluate_image(
    pred: np.ndarray, gt: np.ndarray, image_id: str, threshold: float = 0.5
) -> "ImageResult":
    """Per-image instance Dice (unmatched GT scores 0) plus SA counts."""
    matches = match_instances(pred, gt, threshold)
    by_gt = {m.gt_id: m.pred_id for m in matches}
    per_instance = []
    for g in grid.instance_ids(gt):
        if g in by_gt:
            d = dice(pred == by_gt[g], gt == g)
        else:
            d = 0.0
        per_instance.append((g, d))
    sa, tp, fp, fn = segmentation_accuracy(pred, gt, threshold)
    mean_dice = (
        float(np.mean([d for _, d in per_instance])) if per_instance else 1.0
    )
    return ImageResult(
        image_id=image_id,
        n_gt=len(grid.instance_ids(gt)),
        n_pred=len(grid.instance_ids(pred)),
        tp=tp,
        fp=fp,
        fn=fn,
        dice=mean_dice,
        sa=sa,
        per_instance=per_instance,
    )


@dataclass
class ImageResult:
    image_id: str
    n_gt: int
    n_pred: int
    tp: int
    fp: int
    fn: int
    dice: float
    sa: float
    per_instance: list[tuple[int, float]] = field(default_factory=list)


@dataclass
class EvalReport:
    """Per-image rows plus unweighted dataset means."""

    rows: list[ImageResult]
    dataset_dice: float
    dataset_sa: float
    tp: int
    fp: int
    fn: int
    errors: list[tuple[str, str]] = field(default_factory=list)


def aggregate(rows: list[ImageResult], errors=None) -> EvalReport:
    """Unweighted per-image mean of Dice and SA; totals of the match counts."""
    if not rows:
        raise EmptyInput("cannot aggregate an empty result list")
    return EvalReport(
        rows=list(rows),
        dataset_dice=float(np.mean([r.dice for r in rows])),
        dataset_sa=float(np.mean([r.sa for r in rows])),
        tp=sum(r.tp for r in rows),
        fp=sum(r.fp for r in rows),
        fn=sum(r.fn for r in rows),
        errors=list(errors or []),
    )


def report_to_csv(report: EvalReport) -> str:
    """One row per image plus a dataset summary line.

    Dataset means are unweighted per-image means.
    """
    buf = io.StringIO()
    buf.write("image_id,n_gt,n_pred,tp,fp,fn,dice,sa\n")
    for r in report.rows:
        buf.write(
            f"{r.image_id},{r.n_gt},{r.n_pred},{r.tp},{r.fp},{r.fn},"
            f"{r.dice:.3f},{r.sa:.3f}\n"
        )
    buf.write(
        f"DATASET,,,{report.tp},{report.fp},{report.fn},"
        f"{report.dataset_dice:.3f},{report.dataset_sa:.3f}\n"
    )
    return buf.getvalue()


def report_to_table(report: EvalReport) -> str:
    """Aligned-column text table."""
    header = ["image_id", "n_gt", "n_pred", "tp", "fp", "fn", "dice", "sa"]
    lines = [
        [r.image_id, r.n_gt, r.n_pred, r.tp, r.fp, r.fn, f"{r.dice:.3f}", f"{r.sa:.3f}"]
        for r in report.rows
    ]
    lines.append(
        ["DATASET", "", "", report.tp, report.fp, report.fn,
         f"{report.dataset_dice:.3f}", f"{report.dataset_sa:.3f}"]
    )
    cells = [header] + [[str(c) for c in row] for row in lines]
    widths = [max(len(row[i]) for row in cells) for i in range(len(header))]
    return "\n".join(
        "  ".join(c.ljust(w) for c, w in zip(row, widths)).rstrip() for row in cells
    ) + "\n"
