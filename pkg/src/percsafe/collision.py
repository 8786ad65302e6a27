"""Frame-process collision model.

Per-frame perception is a Bernoulli trial that succeeds with the detector's
recall; frames arrive every t_p seconds while the gripper keeps approaching.
Collision occurs when no frame succeeds before the effective safe travel
distance is used up, which gives the closed-form tail of a geometric
distribution. An event-level simulation of the same process serves as an
independent cross-check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .geometry import (
    EncounterState,
    alpha_critical,
    effective_safe_distance,
)

# Relative slack applied before flooring the frame quotient so that
# analytically exact ratios (e.g. 10.0) are not truncated by float dust.
FLOOR_EPS = 1e-12


class ZeroSpeed(ValueError):
    """No relative approach, so the frame budget is undefined."""


@dataclass(frozen=True)
class PerceptionProfile:
    """One perception algorithm as the safety model sees it.

    t_p: seconds per processed frame, t_r: response latency in seconds,
    recall: per-frame detection probability, iou: mean localisation IoU.
    """

    t_p: float
    t_r: float
    recall: float
    iou: float

    def __post_init__(self):
        if not (math.isfinite(self.t_p) and self.t_p > 0.0):
            raise ValueError(f"t_p must be positive, got {self.t_p}")
        if not (math.isfinite(self.t_r) and self.t_r >= 0.0):
            raise ValueError(f"t_r must be non-negative, got {self.t_r}")
        if not (0.0 <= self.recall <= 1.0):
            raise ValueError(f"recall must lie in [0, 1], got {self.recall}")
        if not (0.0 <= self.iou <= 1.0):
            raise ValueError(f"iou must lie in [0, 1], got {self.iou}")


@dataclass(frozen=True)
class FrameBudget:
    """Number of frames the detector gets before the safe distance runs out."""

    m: int

    def __post_init__(self):
        if self.m < 0:
            raise ValueError(f"frame budget must be non-negative, got {self.m}")

    def __int__(self) -> int:
        return self.m


def total_latency(p: PerceptionProfile) -> float:
    """Total per-frame latency from sensory input to completed response."""
    return p.t_p + p.t_r


def geometric_tail(p_d: float, budget: FrameBudget | int) -> float:
    """Probability that none of m independent Bernoulli(p_d) frames succeed."""
    if not (0.0 <= p_d <= 1.0):
        raise ValueError(f"p_d must lie in [0, 1], got {p_d}")
    m = int(budget)
    if m < 0:
        raise ValueError(f"frame budget must be non-negative, got {m}")
    return (1.0 - p_d) ** m


def frame_budget(l_s: float, u: float, t_p: float) -> FrameBudget:
    """Frames processed before traveling l_s at speed u with frame time t_p."""
    if u == 0.0:
        raise ZeroSpeed("relative speed is zero")
    if not (u > 0.0 and t_p > 0.0):
        raise ValueError(f"u and t_p must be positive, got u={u}, t_p={t_p}")
    if l_s < 0.0:
        raise ValueError(f"l_s must be non-negative, got {l_s}")
    q = l_s / (u * t_p)
    return FrameBudget(int(math.floor(q * (1.0 + FLOOR_EPS))))


def collision_probability(e: EncounterState, p: PerceptionProfile) -> float:
    """Closed-form collision probability for one encounter/profile pair.

    Returns 1 when the margins already touch, 0 when there is no relative
    approach or the motion points outside the collision cone, and otherwise
    (1 - recall)^m with m the frame budget over the effective safe distance.
    """
    if e.r <= e.margins.total:
        return 1.0
    if e.u == 0.0:
        return 0.0
    if abs(e.alpha) > alpha_critical(e.r, e.margins):
        return 0.0
    l_s = effective_safe_distance(e, p.iou, p.t_r)
    return geometric_tail(p.recall, frame_budget(l_s, e.u, p.t_p))


def frame_process_oracle(
    e: EncounterState,
    p: PerceptionProfile,
    trials: int,
    seed: int,
) -> float:
    """Empirical collision fraction from a literal frame-by-frame simulation.

    Each trial walks the frame process directly: every t_p seconds a frame
    completes, detection succeeds with probability recall, and the gripper
    advances u*t_p; the trial collides if no frame succeeds before the travel
    exceeds the effective safe distance. Deterministic for a fixed seed.

    Runtime grows with trials/recall, so keep recall well above zero for
    large trial counts (recall = 0 short-circuits to certain collision).
    """
    if trials < 1:
        raise ValueError(f"trials must be at least 1, got {trials}")
    if e.r <= e.margins.total:
        return 1.0
    if e.u == 0.0:
        return 0.0
    if abs(e.alpha) > alpha_critical(e.r, e.margins):
        return 0.0
    l_s = effective_safe_distance(e, p.iou, p.t_r)
    if p.recall == 0.0:
        return 1.0

    rng = np.random.default_rng(seed)
    step = e.u * p.t_p
    alive = trials
    collided = 0
    k = 1
    while alive > 0:
        if k * step > l_s:
            collided += alive
            break
        alive -= int(np.count_nonzero(rng.random(alive) < p.recall))
        k += 1
    return collided / trials
