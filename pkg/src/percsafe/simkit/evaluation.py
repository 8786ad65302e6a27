"""COCO-protocol-style scoring of pipeline logs.

Single object per frame: average recall over the 0.50:0.05:0.95 IoU
thresholds with at most one match per frame, average precision from the
confidence-ranked precision/recall curve with 101-point interpolation, mean
IoU of the consumed (highest-confidence) detections, and timing means.
``reference_evaluate`` recomputes everything with exhaustive loops and no
interpolation shortcuts, as an independent oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import TYPE_CHECKING, Sequence

from ..attentive import BBox
from ..collision import PerceptionProfile
from ..geometry import axis_aligned_iou

if TYPE_CHECKING:
    from .runner import FrameRecord

COCO_IOU_THRESHOLDS = tuple(round(0.5 + 0.05 * i, 2) for i in range(10))
_RECALL_LEVELS = tuple(i / 100.0 for i in range(101))


@dataclass(frozen=True)
class EvalSummary:
    """Aggregate metrics of one pipeline run. Times in milliseconds,
    AR and AP in percent, mean IoU dimensionless."""

    inference_time: float
    total_time: float
    overhead_time: float
    ar: float
    mean_iou: float
    ap50: float
    ap75: float
    n_frames: int

    def __post_init__(self):
        if abs(self.total_time - (self.inference_time + self.overhead_time)) > 1e-9:
            raise ValueError("total time must equal inference plus overhead")
        for name, v in (("ar", self.ar), ("ap50", self.ap50), ("ap75", self.ap75)):
            if not (0.0 <= v <= 100.0):
                raise ValueError(f"{name} must lie in [0, 100], got {v}")


def _frame_detections(
    records: Sequence["FrameRecord"],
    gt_track: Sequence[BBox],
) -> list[list[tuple[float, float]]]:
    """Per frame: (confidence, iou-vs-gt) for every detection, in log order."""
    per_frame = []
    for rec, gt in zip(records, gt_track):
        per_frame.append(
            [
                (d.confidence, axis_aligned_iou(d.box.as_tuple(), gt.as_tuple()))
                for d in rec.detections
            ]
        )
    return per_frame


def _ranked(per_frame) -> list[tuple[float, int, int, float]]:
    ranked = [
        (conf, frame_idx, det_idx, iou)
        for frame_idx, dets in enumerate(per_frame)
        for det_idx, (conf, iou) in enumerate(dets)
    ]
    ranked.sort(key=lambda item: (-item[0], item[1], item[2]))
    return ranked


def _average_precision(ranked, n_gt: int, threshold: float) -> float:
    if n_gt == 0:
        return 0.0
    matched = set()
    precisions = []
    recalls = []
    tp = 0
    fp = 0
    for conf, frame_idx, det_idx, iou in ranked:
        if iou >= threshold and frame_idx not in matched:
            matched.add(frame_idx)
            tp += 1
        else:
            fp += 1
        precisions.append(tp / (tp + fp))
        recalls.append(tp / n_gt)

    # Interpolated precision is the running maximum from the right.
    best_right = 0.0
    interp = [0.0] * len(precisions)
    for j in range(len(precisions) - 1, -1, -1):
        best_right = max(best_right, precisions[j])
        interp[j] = best_right

    total = 0.0
    for level in _RECALL_LEVELS:
        value = 0.0
        for j in range(len(recalls)):
            if recalls[j] >= level:
                value = interp[j]
                break
        total += value
    return total / len(_RECALL_LEVELS) * 100.0


def evaluate(
    records: Sequence["FrameRecord"],
    gt_track: Sequence[BBox],
    iou_thresholds: Sequence[float] = COCO_IOU_THRESHOLDS,
) -> EvalSummary:
    """Score a per-frame log against its ground-truth track.

    Worked example: two frames with one detection each, IoUs {0.8, 0.6} and
    confidences {0.9, 0.8}, give AP@0.5 = 100, AP@0.75 = 100*51/101 ~ 50.5,
    and AR = 50.
    """
    if len(records) != len(gt_track):
        raise ValueError(
            f"log has {len(records)} frames but track has {len(gt_track)}"
        )
    n = len(records)
    per_frame = _frame_detections(records, gt_track)
    ranked = _ranked(per_frame)

    matched_counts = []
    for t in iou_thresholds:
        matched = sum(1 for dets in per_frame if any(iou >= t for _, iou in dets))
        matched_counts.append(matched / n if n else 0.0)
    ar = sum(matched_counts) / len(matched_counts) * 100.0 if matched_counts else 0.0

    consumed = [max(dets, key=lambda d: d[0])[1] for dets in per_frame if dets]
    mean_iou = sum(consumed) / len(consumed) if consumed else 0.0

    ap50 = _average_precision(ranked, n, 0.5)
    ap75 = _average_precision(ranked, n, 0.75)

    inference = sum(rec.inference for rec in records) / n * 1000.0 if n else 0.0
    overhead = sum(rec.overhead for rec in records) / n * 1000.0 if n else 0.0
    return EvalSummary(
        inference_time=inference,
        total_time=inference + overhead,
        overhead_time=overhead,
        ar=ar,
        mean_iou=mean_iou,
        ap50=ap50,
        ap75=ap75,
        n_frames=n,
    )


def reference_evaluate(
    records: Sequence["FrameRecord"],
    gt_track: Sequence[BBox],
    iou_thresholds: Sequence[float] = COCO_IOU_THRESHOLDS,
) -> EvalSummary:
    """Exhaustive re-implementation of :func:`evaluate` for cross-checking.

    Matching and interpolation are done by direct enumeration; intended for
    small logs.
    """
    if len(records) != len(gt_track):
        raise ValueError(
            f"log has {len(records)} frames but track has {len(gt_track)}"
        )
    n = len(records)
    per_frame = []
    for rec, gt in zip(records, gt_track):
        dets = []
        for d in rec.detections:
            dets.append((d.confidence, axis_aligned_iou(d.box.as_tuple(), gt.as_tuple())))
        per_frame.append(dets)
    ranked = sorted(
        (
            (conf, frame_idx, det_idx, iou)
            for frame_idx, dets in enumerate(per_frame)
            for det_idx, (conf, iou) in enumerate(dets)
        ),
        key=lambda item: (-item[0], item[1], item[2]),
    )

    recall_sum = 0.0
    for t in iou_thresholds:
        matched = 0
        for dets in per_frame:
            hit = False
            for _, iou in dets:
                if iou >= t:
                    hit = True
            if hit:
                matched += 1
        recall_sum += matched / n if n else 0.0
    ar = recall_sum / len(iou_thresholds) * 100.0 if iou_thresholds else 0.0

    consumed = []
    for dets in per_frame:
        if not dets:
            continue
        best = dets[0]
        for d in dets[1:]:
            if d[0] > best[0]:
                best = d
        consumed.append(best[1])
    mean_iou = sum(consumed) / len(consumed) if consumed else 0.0

    aps = {}
    for t in (0.5, 0.75):
        if n == 0:
            aps[t] = 0.0
            continue
        matched = set()
        points = []
        tp = 0
        fp = 0
        for conf, frame_idx, det_idx, iou in ranked:
            if iou >= t and frame_idx not in matched:
                matched.add(frame_idx)
                tp += 1
            else:
                fp += 1
            points.append((tp / (tp + fp), tp / n))
        total = 0.0
        for level in _RECALL_LEVELS:
            best_prec = 0.0
            for j, (prec_j, recall_j) in enumerate(points):
                if recall_j >= level:
                    candidate = 0.0
                    for prec_k, recall_k in points[j:]:
                        if prec_k > candidate:
                            candidate = prec_k
                    if candidate > best_prec:
                        best_prec = candidate
                    break
            total += best_prec
        aps[t] = total / len(_RECALL_LEVELS) * 100.0

    inference = sum(rec.inference for rec in records) / n * 1000.0 if n else 0.0
    overhead = sum(rec.overhead for rec in records) / n * 1000.0 if n else 0.0
    return EvalSummary(
        inference_time=inference,
        total_time=inference + overhead,
        overhead_time=overhead,
        ar=ar,
        mean_iou=mean_iou,
        ap50=aps[0.5],
        ap75=aps[0.75],
        n_frames=n,
    )


def to_profile(
    e: EvalSummary,
    t_r: float,
    t_p_mode: str = "total",
) -> PerceptionProfile:
    """Bridge an evaluation summary into the safety model's profile.

    ``t_p_mode`` selects which timing column feeds the per-frame latency:
    'total' (default; the pipeline cannot start a new frame before overhead
    completes) or 'inference' for sensitivity studies.
    """
    if t_p_mode not in ("total", "inference"):
        raise ValueError(f"t_p_mode must be 'total' or 'inference', got {t_p_mode!r}")
    t_p_ms = e.total_time if t_p_mode == "total" else e.inference_time
    return PerceptionProfile(
        t_p=t_p_ms / 1000.0,
        t_r=t_r,
        recall=e.ar / 100.0,
        iou=e.mean_iou,
    )
