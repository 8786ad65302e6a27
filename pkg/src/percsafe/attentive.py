"""Attentive-region processing as a deterministic per-frame state machine.

Each frame, a region likely to contain the tracked object is derived from
past detections (expanded, predicted, or both), an aggregation plan picks
between stitching regions and running them separately, the smallest network
in the ensemble that fits the crop is selected, and detections from model
coordinates are mapped back to the global frame. Lost targets fall back to
full-frame processing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Protocol, Sequence

MODES = ("expansion", "prediction", "hybrid")


@dataclass(frozen=True)
class BBox:
    """Axis-aligned box in pixels, top-left origin."""

    x: float
    y: float
    w: float
    h: float

    def __post_init__(self):
        if not (self.w > 0.0 and self.h > 0.0):
            raise ValueError(f"box must have positive extent, got {self!r}")
        if not all(math.isfinite(v) for v in (self.x, self.y, self.w, self.h)):
            raise ValueError(f"box has non-finite fields: {self!r}")

    @property
    def cx(self) -> float:
        return self.x + self.w / 2.0

    @property
    def cy(self) -> float:
        return self.y + self.h / 2.0

    def as_tuple(self) -> tuple[float, float, float, float]:
        return (self.x, self.y, self.w, self.h)


@dataclass(frozen=True)
class FrameMeta:
    """Dimensions and timing of one video frame."""

    width: int
    height: int
    index: int
    timestamp: float

    def __post_init__(self):
        if self.width <= 0 or self.height <= 0:
            raise ValueError(f"frame dimensions must be positive: {self!r}")

    def full_box(self) -> BBox:
        return BBox(0.0, 0.0, float(self.width), float(self.height))


@dataclass(frozen=True)
class CropTransform:
    """Mapping from global pixels to model-input pixels.

    model = (global - origin) * scale. Crops are anchored at the top-left of
    the (square, letterboxed) model input, so padding never shifts the origin.
    """

    origin_x: float
    origin_y: float
    scale: float

    def __post_init__(self):
        if not (self.scale > 0.0):
            raise ValueError(f"scale must be positive, got {self.scale}")

    def to_model(self, box: BBox) -> BBox:
        return BBox(
            (box.x - self.origin_x) * self.scale,
            (box.y - self.origin_y) * self.scale,
            box.w * self.scale,
            box.h * self.scale,
        )


def map_back(det: BBox, t: CropTransform) -> BBox:
    """Return a model-coordinate detection to global coordinates.

    Exact algebraic inverse of :meth:`CropTransform.to_model`.
    """
    return BBox(
        det.x / t.scale + t.origin_x,
        det.y / t.scale + t.origin_y,
        det.w / t.scale,
        det.h / t.scale,
    )


@dataclass(frozen=True)
class ModelProfile:
    """Planning characteristics of one ensemble member.

    Accuracy deltas are offsets against the full-size model and feed the
    synthetic detector; latency drives aggregation planning.
    """

    latency: float
    recall_delta: float = 0.0
    iou_delta: float = 0.0

    def __post_init__(self):
        if not (self.latency > 0.0):
            raise ValueError(f"latency must be positive, got {self.latency}")


@dataclass(frozen=True)
class EnsembleSpec:
    """Square network input sizes with per-size planning profiles."""

    sizes: tuple[int, ...]
    profiles: dict[int, ModelProfile] = field(repr=False)

    def __post_init__(self):
        if len(self.sizes) == 0:
            raise ValueError("ensemble needs at least one size")
        if any(b <= a for a, b in zip(self.sizes, self.sizes[1:])):
            raise ValueError(f"sizes must be strictly increasing: {self.sizes}")
        missing = [s for s in self.sizes if s not in self.profiles]
        if missing:
            raise ValueError(f"missing profiles for sizes {missing}")

    @property
    def full_size(self) -> int:
        return self.sizes[-1]

    def latency(self, size: int) -> float:
        return self.profiles[size].latency

    @classmethod
    def scaled(
        cls,
        full_latency: float,
        sizes: Sequence[int] = (320, 640, 960, 1280),
        exponent: float = 2.0,
        recall_step: float = -0.005,
        iou_step: float = -0.005,
    ) -> "EnsembleSpec":
        """Ensemble whose latency scales as a power of the size ratio, with
        fixed accuracy offsets per step below full size."""
        sizes = tuple(sorted(int(s) for s in sizes))
        full = sizes[-1]
        profiles = {}
        for i, size in enumerate(sizes):
            steps_below = len(sizes) - 1 - i
            profiles[size] = ModelProfile(
                latency=full_latency * (size / full) ** exponent,
                recall_delta=recall_step * steps_below,
                iou_delta=iou_step * steps_below,
            )
        return cls(sizes=sizes, profiles=profiles)


@dataclass(frozen=True)
class AttentiveState:
    """Tracker state carried between frames of one video stream."""

    last_box: BBox | None = None
    prev_box: BBox | None = None
    miss_streak: int = 0
    expansion_rate: float = 2.0
    mode: str = "expansion"
    fallback_threshold: int = 1

    def __post_init__(self):
        if self.expansion_rate < 1.0:
            raise ValueError(f"expansion_rate must be >= 1, got {self.expansion_rate}")
        if self.miss_streak < 0:
            raise ValueError("miss_streak must be non-negative")
        if self.mode not in MODES:
            raise ValueError(f"mode must be one of {MODES}, got {self.mode!r}")
        if self.fallback_threshold < 1:
            raise ValueError("fallback_threshold must be at least 1")


def _clip_to_frame(x: float, y: float, w: float, h: float, frame: FrameMeta) -> BBox | None:
    x0 = max(0.0, x)
    y0 = max(0.0, y)
    x1 = min(float(frame.width), x + w)
    y1 = min(float(frame.height), y + h)
    if x1 - x0 < 1.0 or y1 - y0 < 1.0:
        return None
    return BBox(x0, y0, x1 - x0, y1 - y0)


def attentive_region(state: AttentiveState, frame: FrameMeta) -> BBox:
    """Region to process for the current frame.

    Expansion centers an enlarged box on the last detection; prediction
    re-centers the raw box on a constant-velocity extrapolation of the last
    two centers; hybrid combines the predicted center with expansion sizing.
    Falls back to the full frame on a cold start, after enough consecutive
    misses, or when the region would leave the frame entirely.
    """
    if state.last_box is None or state.miss_streak >= state.fallback_threshold:
        return frame.full_box()
    box = state.last_box
    cx, cy = box.cx, box.cy
    if state.mode in ("prediction", "hybrid"):
        if state.prev_box is not None:
            cx = 2.0 * box.cx - state.prev_box.cx
            cy = 2.0 * box.cy - state.prev_box.cy
    if state.mode == "prediction":
        w, h = box.w, box.h
    else:
        w, h = state.expansion_rate * box.w, state.expansion_rate * box.h
    clipped = _clip_to_frame(cx - w / 2.0, cy - h / 2.0, w, h, frame)
    return clipped if clipped is not None else frame.full_box()


def select_network(region: BBox, ensemble: EnsembleSpec) -> tuple[int, CropTransform]:
    """Smallest ensemble size that fits the region, with its crop transform.

    Regions larger than the biggest input are downscaled to fit it; smaller
    regions are letterboxed at native resolution (scale 1).
    """
    extent = max(region.w, region.h)
    for size in ensemble.sizes:
        if size >= extent:
            return size, CropTransform(region.x, region.y, 1.0)
    size = ensemble.full_size
    return size, CropTransform(region.x, region.y, size / extent)


@dataclass(frozen=True)
class CropRegion:
    """One region of a crop: its global extent and coordinate transform."""

    region: BBox
    transform: CropTransform

    def model_bounds(self) -> tuple[float, float, float, float]:
        box = self.transform.to_model(self.region)
        return (box.x, box.y, box.x + box.w, box.y + box.h)


@dataclass(frozen=True)
class CropSpec:
    """Input description for one detector pass (one or more stitched slots)."""

    regions: tuple[CropRegion, ...]
    size: int
    frame: FrameMeta


@dataclass(frozen=True)
class Detection:
    """A detected box with its confidence score."""

    box: BBox
    confidence: float


class Detector(Protocol):
    """Detector backend contract used by the pipeline step.

    Given a crop descriptor and the selected model input size, returns the
    detections in model coordinates together with the pass latency in
    seconds.
    """

    def detect(self, crop: CropSpec, size: int) -> tuple[list[Detection], float]:
        ...


@dataclass(frozen=True)
class AggregationPlan:
    """Chosen way to process the current regions: one stitched pass or one
    pass per region, whichever predicts lower total latency."""

    kind: str
    crops: tuple[CropSpec, ...]
    predicted_latency: float


def _stitched_crop(regions: Sequence[BBox], ensemble: EnsembleSpec, frame: FrameMeta) -> tuple[CropSpec, int]:
    # Size selection follows the bounding union of the regions; the realised
    # canvas concatenates the crops horizontally, so each slot gets its own
    # transform with the slot offset folded into the origin.
    x0 = min(b.x for b in regions)
    y0 = min(b.y for b in regions)
    x1 = max(b.x + b.w for b in regions)
    y1 = max(b.y + b.h for b in regions)
    union = BBox(x0, y0, x1 - x0, y1 - y0)
    size, _ = select_network(union, ensemble)

    canvas_w = sum(b.w for b in regions)
    canvas_h = max(b.h for b in regions)
    scale = 1.0 if size >= max(canvas_w, canvas_h) else size / max(canvas_w, canvas_h)
    slots = []
    offset = 0.0
    for b in regions:
        slots.append(
            CropRegion(
                region=b,
                transform=CropTransform(b.x - offset, b.y, scale),
            )
        )
        offset += b.w
    return CropSpec(regions=tuple(slots), size=size, frame=frame), size


def optimize_aggregation(
    regions: Sequence[BBox],
    ensemble: EnsembleSpec,
    frame: FrameMeta,
) -> AggregationPlan:
    """Pick the cheaper of one stitched pass and per-region passes.

    The stitched pass is costed at the size selected for the bounding union
    of the regions; the alternative sums each region's own selected-model
    latency. Ties go to the stitched plan (fewer passes).
    """
    if len(regions) == 0:
        raise ValueError("need at least one region")
    per_crops = []
    per_cost = 0.0
    for b in regions:
        size, transform = select_network(b, ensemble)
        per_crops.append(
            CropSpec(
                regions=(CropRegion(region=b, transform=transform),),
                size=size,
                frame=frame,
            )
        )
        per_cost += ensemble.latency(size)
    if len(regions) == 1:
        return AggregationPlan(
            kind="per_region", crops=tuple(per_crops), predicted_latency=per_cost
        )
    stitched, stitched_size = _stitched_crop(regions, ensemble, frame)
    stitched_cost = ensemble.latency(stitched_size)
    if per_cost < stitched_cost:
        return AggregationPlan(
            kind="per_region", crops=tuple(per_crops), predicted_latency=per_cost
        )
    return AggregationPlan(
        kind="stitched", crops=(stitched,), predicted_latency=stitched_cost
    )


@dataclass(frozen=True)
class StepResult:
    """Outcome of processing one frame."""

    detections: tuple[Detection, ...]
    latency: float
    inference: float
    state: AttentiveState
    region: BBox
    sizes: tuple[int, ...]
    full_frame: bool


def _attribute_slot(det: Detection, crop: CropSpec) -> CropRegion:
    cx = det.box.cx
    cy = det.box.cy
    nearest = crop.regions[0]
    nearest_dist = math.inf
    for slot in crop.regions:
        x0, y0, x1, y1 = slot.model_bounds()
        if x0 <= cx <= x1 and y0 <= cy <= y1:
            return slot
        dist = abs(cx - (x0 + x1) / 2.0) + abs(cy - (y0 + y1) / 2.0)
        if dist < nearest_dist:
            nearest, nearest_dist = slot, dist
    return nearest


def step(
    state: AttentiveState,
    frame: FrameMeta,
    detector: Detector,
    ensemble: EnsembleSpec,
    overhead: float = 0.0,
) -> StepResult:
    """Process one frame: region, plan, detector pass(es), result mapping.

    Detections are returned in global coordinates, ordered by slot and then
    detector order. A successful frame stores the most confident box and
    resets the miss streak; an empty result increments it.
    """
    region = attentive_region(state, frame)
    full = region == frame.full_box()
    plan = optimize_aggregation([region], ensemble, frame)

    detections: list[Detection] = []
    inference = 0.0
    sizes = []
    for crop in plan.crops:
        model_dets, latency = detector.detect(crop, crop.size)
        inference += latency
        sizes.append(crop.size)
        for det in model_dets:
            slot = _attribute_slot(det, crop)
            detections.append(
                Detection(box=map_back(det.box, slot.transform), confidence=det.confidence)
            )

    if detections:
        best = max(detections, key=lambda d: d.confidence)
        new_state = replace(
            state, last_box=best.box, prev_box=state.last_box, miss_streak=0
        )
    else:
        new_state = replace(state, miss_streak=state.miss_streak + 1)

    return StepResult(
        detections=tuple(detections),
        latency=inference + overhead,
        inference=inference,
        state=new_state,
        region=region,
        sizes=tuple(sizes),
        full_frame=full,
    )
