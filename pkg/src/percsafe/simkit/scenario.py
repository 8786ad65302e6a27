"""Synthetic single-object ground-truth tracks."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..attentive import BBox, FrameMeta
from ..geometry import Vec3

KINDS = ("constant-velocity", "sinusoidal", "random-walk")


@dataclass(frozen=True)
class Scenario:
    """A ground-truth track over a frame sequence.

    ``world_track`` optionally carries per-frame world-space position and
    velocity for experiments that need metric kinematics.
    """

    frames: tuple[FrameMeta, ...]
    gt_track: tuple[BBox, ...]
    seed: int
    world_track: tuple[tuple[Vec3, Vec3], ...] | None = None

    def __post_init__(self):
        if len(self.frames) != len(self.gt_track):
            raise ValueError("gt_track length must match frames length")
        for frame, box in zip(self.frames, self.gt_track):
            if (
                box.x < 0.0
                or box.y < 0.0
                or box.x + box.w > frame.width
                or box.y + box.h > frame.height
            ):
                raise ValueError(f"box {box} leaves frame {frame}")


def _centers(
    kind: str,
    rng: np.random.Generator,
    length: int,
    max_step: float,
    lo_x: float,
    hi_x: float,
    lo_y: float,
    hi_y: float,
) -> np.ndarray:
    start = np.array(
        [rng.uniform(lo_x, hi_x), rng.uniform(lo_y, hi_y)]
    )
    if kind == "constant-velocity":
        theta = rng.uniform(0.0, 2.0 * math.pi)
        speed = rng.uniform(0.0, max_step)
        v = speed * np.array([math.cos(theta), math.sin(theta)])
        # Shrink the velocity so the whole run stays inside the frame.
        for axis, (lo, hi) in enumerate(((lo_x, hi_x), (lo_y, hi_y))):
            total = v[axis] * (length - 1)
            if total > 0 and start[axis] + total > hi:
                v[axis] = (hi - start[axis]) / (length - 1)
            elif total < 0 and start[axis] + total < lo:
                v[axis] = (lo - start[axis]) / (length - 1)
        t = np.arange(length)[:, None]
        return start[None, :] + t * v[None, :]
    if kind == "sinusoidal":
        amp_x = rng.uniform(0.2, 1.0) * (hi_x - lo_x) / 2.0
        amp_y = rng.uniform(0.2, 1.0) * (hi_y - lo_y) / 2.0
        # Per-frame displacement of A*sin(w t) is bounded by A*w.
        w_max_x = min(max_step / amp_x, math.pi) if amp_x > 0 else 0.0
        w_max_y = min(max_step / amp_y, math.pi) if amp_y > 0 else 0.0
        w_x = rng.uniform(0.0, w_max_x)
        w_y = rng.uniform(0.0, w_max_y)
        phase_x = rng.uniform(0.0, 2.0 * math.pi)
        phase_y = rng.uniform(0.0, 2.0 * math.pi)
        mid = np.array([(lo_x + hi_x) / 2.0, (lo_y + hi_y) / 2.0])
        t = np.arange(length)
        cx = mid[0] + amp_x * np.sin(w_x * t + phase_x)
        cy = mid[1] + amp_y * np.sin(w_y * t + phase_y)
        return np.stack([cx, cy], axis=1)
    if kind == "random-walk":
        centers = np.empty((length, 2))
        centers[0] = start
        for i in range(1, length):
            theta = rng.uniform(0.0, 2.0 * math.pi)
            stride = rng.uniform(0.0, max_step)
            nxt = centers[i - 1] + stride * np.array(
                [math.cos(theta), math.sin(theta)]
            )
            centers[i] = np.clip(nxt, [lo_x, lo_y], [hi_x, hi_y])
        return centers
    raise ValueError(f"unknown scenario kind {kind!r}; expected one of {KINDS}")


def generate_scenario(
    kind: str,
    width: int,
    height: int,
    length: int,
    ratio_range: tuple[float, float],
    seed: int,
    max_step_frac: float = 0.3,
    fps: float = 30.0,
) -> Scenario:
    """Generate an in-bounds track with a given box-to-frame area ratio.

    The per-frame center displacement is bounded by ``max_step_frac`` times
    the smaller box side, so tracks can deliberately honor or violate the
    containment bound of the attentive-region policy. Deterministic per seed.
    """
    if length < 2:
        raise ValueError(f"length must be at least 2, got {length}")
    lo_ratio, hi_ratio = ratio_range
    if not (0.0 < lo_ratio <= hi_ratio):
        raise ValueError(f"invalid ratio range {ratio_range}")
    if max_step_frac < 0.0:
        raise ValueError("max_step_frac must be non-negative")

    rng = np.random.default_rng(seed)
    ratio = float(rng.uniform(lo_ratio, hi_ratio))
    side = math.sqrt(ratio * width * height)
    aspect = float(rng.uniform(0.8, 1.25))
    w = side * math.sqrt(aspect)
    h = side / math.sqrt(aspect)
    if w > width or h > height:
        raise ValueError(
            f"area ratio {ratio} with aspect {aspect:.3f} does not fit a "
            f"{width}x{height} frame"
        )

    max_step = max_step_frac * min(w, h)
    centers = _centers(
        kind, rng, length, max_step,
        w / 2.0, width - w / 2.0, h / 2.0, height - h / 2.0,
    )
    # Clamp against float dust so boxes sit exactly inside the frame.
    boxes = tuple(
        BBox(
            min(max(float(cx - w / 2.0), 0.0), width - w),
            min(max(float(cy - h / 2.0), 0.0), height - h),
            w,
            h,
        )
        for cx, cy in centers
    )
    frames = tuple(
        FrameMeta(width=width, height=height, index=i, timestamp=i / fps)
        for i in range(length)
    )
    return Scenario(frames=frames, gt_track=boxes, seed=seed)
