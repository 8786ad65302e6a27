"""Statistically parameterised synthetic detector ensemble.

Each call is a Bernoulli trial at the per-size recall. Successful calls emit
one box that achieves a sampled target IoU exactly, constructed by shifting
the ground truth per axis through the closed-form IoU/shift inverse with
random signs, with a confidence that increases with the achieved IoU.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..attentive import (
    BBox,
    CropSpec,
    Detection,
    EnsembleSpec,
)


@dataclass(frozen=True)
class SyntheticDetectorSpec:
    """Statistical behaviour of the detector ensemble.

    ``recall`` and ``iou_mean`` anchor the full-size model; the ensemble's
    per-size deltas shift them for the downscaled members. Latency per pass
    is the ensemble's per-size mean plus Gaussian jitter; per-frame overhead
    covers everything outside model inference.
    """

    ensemble: EnsembleSpec
    recall: float = 0.95
    iou_mean: float = 0.75
    iou_spread: float = 0.03
    latency_jitter: float = 0.0
    confidence_sigma: float = 0.05
    confidence_threshold: float = 0.1
    overhead: float = 0.006

    def __post_init__(self):
        for name, v in (
            ("recall", self.recall),
            ("iou_mean", self.iou_mean),
            ("confidence_threshold", self.confidence_threshold),
        ):
            if not (0.0 <= v <= 1.0):
                raise ValueError(f"{name} must lie in [0, 1], got {v}")
        if self.iou_spread < 0.0 or self.latency_jitter < 0.0 or self.confidence_sigma < 0.0:
            raise ValueError("spreads and jitter must be non-negative")
        if self.overhead < 0.0:
            raise ValueError("overhead must be non-negative")
        latencies = [self.ensemble.latency(s) for s in self.ensemble.sizes]
        if any(b < a for a, b in zip(latencies, latencies[1:])):
            raise ValueError(f"latency must be non-decreasing in size: {latencies}")
        for size in self.ensemble.sizes:
            if not (0.0 <= self.recall_at(size) <= 1.0):
                raise ValueError(f"recall at size {size} leaves [0, 1]")

    def recall_at(self, size: int) -> float:
        return min(1.0, max(0.0, self.recall + self.ensemble.profiles[size].recall_delta))

    def iou_at(self, size: int) -> float:
        return min(1.0, max(0.0, self.iou_mean + self.ensemble.profiles[size].iou_delta))

    def latency_mean_at(self, size: int) -> float:
        return self.ensemble.latency(size)


def _shift_fraction(iou: float) -> float:
    # Per-axis shift as a fraction of the box side that realises `iou`
    # when applied to both axes of an axis-aligned box.
    return 1.0 - math.sqrt(2.0 * iou) / math.sqrt(iou + 1.0)


def synthetic_detect(
    gt: BBox,
    size: int,
    spec: SyntheticDetectorSpec,
    rng: np.random.Generator,
) -> tuple[list[Detection], float]:
    """One detector pass against a ground-truth box, in the box's own frame.

    Returns the (possibly empty) detection list and the sampled latency.
    Detections below the confidence threshold are dropped.
    """
    latency = spec.latency_mean_at(size)
    if spec.latency_jitter > 0.0:
        latency = max(latency + rng.normal(0.0, spec.latency_jitter), 1e-6)
    if rng.random() >= spec.recall_at(size):
        return [], latency

    target_iou = float(np.clip(rng.normal(spec.iou_at(size), spec.iou_spread), 0.0, 1.0))
    frac = _shift_fraction(target_iou)
    sign_x = 1.0 if rng.random() < 0.5 else -1.0
    sign_y = 1.0 if rng.random() < 0.5 else -1.0
    box = BBox(
        gt.x + sign_x * frac * gt.w,
        gt.y + sign_y * frac * gt.h,
        gt.w,
        gt.h,
    )
    confidence = float(np.clip(target_iou + rng.normal(0.0, spec.confidence_sigma), 0.0, 1.0))
    if confidence < spec.confidence_threshold:
        return [], latency
    return [Detection(box=box, confidence=confidence)], latency


class SyntheticDetector:
    """Detector-protocol adapter over a ground-truth track.

    Sees only the crop it is given: the object is detectable when its center
    lies inside one of the crop's regions, and detections come back in model
    coordinates of the containing slot. Owns its RNG stream, so runs are
    deterministic per seed.
    """

    def __init__(
        self,
        spec: SyntheticDetectorSpec,
        gt_track: tuple[BBox, ...],
        seed: int,
    ):
        self.spec = spec
        self.gt_track = gt_track
        self.rng = np.random.default_rng(seed)

    def detect(self, crop: CropSpec, size: int) -> tuple[list[Detection], float]:
        gt = self.gt_track[crop.frame.index]
        slot = None
        for candidate in crop.regions:
            b = candidate.region
            if b.x <= gt.cx <= b.x + b.w and b.y <= gt.cy <= b.y + b.h:
                slot = candidate
                break
        if slot is None:
            # Object not visible in this crop; the model still runs.
            latency = self.spec.latency_mean_at(size)
            if self.spec.latency_jitter > 0.0:
                latency = max(latency + self.rng.normal(0.0, self.spec.latency_jitter), 1e-6)
            return [], latency

        gt_model = slot.transform.to_model(gt)
        return synthetic_detect(gt_model, size, self.spec, self.rng)
