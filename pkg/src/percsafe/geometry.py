"""Closed-form encounter geometry for a gripper/hand sphere pair.

Both agents carry spherical safety margins and move with constant relative
velocity. This module provides the collision cone, the maximum distance the
gripper can travel before the margin spheres touch, the conversion between
bounding-box IoU and the metric localisation shift it implies, and the
reduction of the safe travel distance under that shift plus response latency.

All lengths are meters, speeds m/s, angles radians.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

SQRT2 = math.sqrt(2.0)

# Rounding slack for radicands that are analytically non-negative inside the
# collision cone. Anything more negative than this is a caller bug.
_RADICAND_DUST = 1e-12


class GeometryError(ValueError):
    """Invalid encounter geometry."""


class AlreadyInContact(GeometryError):
    """Center distance is already within the combined safety margins."""


class OutsideCone(GeometryError):
    """Relative motion points outside the collision cone."""


@dataclass(frozen=True)
class Vec3:
    """Position or velocity vector in camera coordinates."""

    x: float
    y: float
    z: float = 0.0

    def __post_init__(self):
        if not all(math.isfinite(c) for c in (self.x, self.y, self.z)):
            raise ValueError(f"non-finite vector component in {self!r}")

    def __sub__(self, other: "Vec3") -> "Vec3":
        return Vec3(self.x - other.x, self.y - other.y, self.z - other.z)

    def norm(self) -> float:
        return math.sqrt(self.x * self.x + self.y * self.y + self.z * self.z)

    def dot(self, other: "Vec3") -> float:
        return self.x * other.x + self.y * other.y + self.z * other.z

    def cross_norm(self, other: "Vec3") -> float:
        """Magnitude of the cross product."""
        cx = self.y * other.z - self.z * other.y
        cy = self.z * other.x - self.x * other.z
        cz = self.x * other.y - self.y * other.x
        return math.sqrt(cx * cx + cy * cy + cz * cz)


@dataclass(frozen=True)
class SafetyMargins:
    """Spherical safety margin radii for the gripper (s_a) and hand (s_b)."""

    s_a: float
    s_b: float

    def __post_init__(self):
        for name, v in (("s_a", self.s_a), ("s_b", self.s_b)):
            if not (math.isfinite(v) and v > 0.0):
                raise ValueError(f"{name} must be positive and finite, got {v}")

    @property
    def total(self) -> float:
        return self.s_a + self.s_b

    @classmethod
    def from_total(cls, total: float) -> "SafetyMargins":
        """Equal split of a combined margin between the two agents."""
        return cls(total / 2.0, total / 2.0)


@dataclass(frozen=True)
class EncounterState:
    """Relative kinematics of the gripper/hand pair.

    r is the center distance, u the relative speed, alpha the angle between
    the line of sight and the relative velocity.
    """

    r: float
    u: float
    alpha: float
    margins: SafetyMargins

    def __post_init__(self):
        if not (math.isfinite(self.r) and self.r >= 0.0):
            raise ValueError(f"r must be non-negative, got {self.r}")
        if not (math.isfinite(self.u) and self.u >= 0.0):
            raise ValueError(f"u must be non-negative, got {self.u}")
        if not (math.isfinite(self.alpha) and abs(self.alpha) <= math.pi):
            raise ValueError(f"alpha must lie in [-pi, pi], got {self.alpha}")

    @property
    def degenerate(self) -> bool:
        """True when the angle is undefined (no separation or no motion)."""
        return self.r == 0.0 or self.u == 0.0


def encounter_from_vectors(
    r_a: Vec3,
    r_b: Vec3,
    u_a: Vec3,
    u_b: Vec3,
    margins: SafetyMargins,
) -> EncounterState:
    """Build an encounter from per-agent position and velocity vectors.

    The angle is computed with a two-argument arctangent of the cross and dot
    magnitudes, which stays accurate near 0 and pi. Degenerate encounters
    (zero separation or zero relative speed) get alpha = 0 and are flagged
    through ``EncounterState.degenerate``.
    """
    rel_r = r_b - r_a
    rel_u = u_a - u_b
    r = rel_r.norm()
    u = rel_u.norm()
    if r == 0.0 or u == 0.0:
        return EncounterState(r=r, u=u, alpha=0.0, margins=margins)
    alpha = math.atan2(rel_r.cross_norm(rel_u), rel_r.dot(rel_u))
    return EncounterState(r=r, u=u, alpha=alpha, margins=margins)


def alpha_critical(r: float, margins: SafetyMargins) -> float:
    """Half-opening angle of the collision cone at center distance r.

    sin(alpha_c) = (s_a + s_b) / r, so straight-line approach can reach
    contact only for |alpha| <= alpha_c.
    """
    s = margins.total
    if r <= s:
        raise AlreadyInContact(
            f"center distance {r} is within combined margins {s}"
        )
    return math.asin(s / r)


def _cone_radicand(r: float, s: float, alpha: float) -> float:
    rad = s * s - r * r * math.sin(alpha) ** 2
    if rad < 0.0:
        if rad < -_RADICAND_DUST * s * s:
            raise AssertionError(
                f"negative radicand {rad} inside the collision cone"
            )
        rad = 0.0
    return rad


def safe_travel_distance(e: EncounterState) -> float:
    """Maximum distance the gripper can travel before the margins touch.

    L = r cos(alpha) - sqrt((s_a+s_b)^2 - r^2 sin^2(alpha)), valid inside
    the collision cone.
    """
    s = e.margins.total
    if e.r <= s:
        raise AlreadyInContact(
            f"center distance {e.r} is within combined margins {s}"
        )
    a_c = alpha_critical(e.r, e.margins)
    if abs(e.alpha) > a_c:
        raise OutsideCone(
            f"|alpha|={abs(e.alpha)} exceeds critical angle {a_c}"
        )
    rad = _cone_radicand(e.r, s, e.alpha)
    return max(e.r * math.cos(e.alpha) - math.sqrt(rad), 0.0)


def iou_from_shift(b: float, s_b: float) -> float:
    """IoU of two equal squares of side s_b offset by b along each axis."""
    if not (0.0 <= b <= s_b):
        raise ValueError(f"shift b={b} outside [0, s_b={s_b}]")
    d = s_b - b
    return d * d / (2.0 * s_b * s_b - d * d)


def shift_from_iou(iou: float, s_b: float) -> float:
    """Per-axis shift that produces a given IoU for squares of side s_b.

    Exact inverse of :func:`iou_from_shift`.
    """
    if not (0.0 <= iou <= 1.0):
        raise ValueError(f"iou={iou} outside [0, 1]")
    return s_b * (1.0 - math.sqrt(2.0 * iou) / math.sqrt(iou + 1.0))


@dataclass(frozen=True)
class ShiftModel:
    """A consistent (IoU, per-axis shift) pair for a hand box of side s_b."""

    iou: float
    b: float

    @classmethod
    def from_iou(cls, iou: float, s_b: float) -> "ShiftModel":
        return cls(iou=iou, b=shift_from_iou(iou, s_b))

    @classmethod
    def from_shift(cls, b: float, s_b: float) -> "ShiftModel":
        return cls(iou=iou_from_shift(b, s_b), b=b)


def effective_safe_distance(e: EncounterState, iou: float, t_r: float) -> float:
    """Safe travel distance after localisation-shift and response penalties.

    The predicted hand box is assumed shifted diagonally toward the gripper
    (worst case), which inflates the contact sphere by sqrt(2)*b along the
    approach; the response latency consumes a further u*t_r of travel.
    Clamped at zero.
    """
    if t_r < 0.0:
        raise ValueError(f"t_r must be non-negative, got {t_r}")
    distance = safe_travel_distance(e)
    s = e.margins.total
    b = shift_from_iou(iou, e.margins.s_b)
    rad = _cone_radicand(e.r, s, e.alpha)
    inner = (s + SQRT2 * b) ** 2 - e.r * e.r * math.sin(e.alpha) ** 2
    penalty = math.sqrt(inner) - math.sqrt(rad)
    return max(0.0, distance - penalty - e.u * t_r)


def axis_aligned_iou(
    box_a: tuple[float, float, float, float],
    box_b: tuple[float, float, float, float],
) -> float:
    """Plain intersection-over-union of two (x, y, w, h) rectangles.

    Brute-force reference used to validate the closed-form square model and
    by the detection evaluator.
    """
    ax, ay, aw, ah = box_a
    bx, by, bw, bh = box_b
    ix = max(0.0, min(ax + aw, bx + bw) - max(ax, bx))
    iy = max(0.0, min(ay + ah, by + bh) - max(ay, by))
    inter = ix * iy
    union = aw * ah + bw * bh - inter
    if union <= 0.0:
        return 0.0
    return inter / union


def sweep_safe_distance(e: EncounterState, step: float = 1e-6) -> float:
    """Brute-force oracle for :func:`safe_travel_distance`.

    Steps the gripper along the relative velocity direction and reports the
    travel distance at which the center separation first drops below the
    combined margins. Accurate to one step.
    """
    s = e.margins.total
    if e.r <= s:
        raise AlreadyInContact(
            f"center distance {e.r} is within combined margins {s}"
        )
    a_c = alpha_critical(e.r, e.margins)
    if abs(e.alpha) > a_c:
        raise OutsideCone(
            f"|alpha|={abs(e.alpha)} exceeds critical angle {a_c}"
        )
    n = int(math.ceil(e.r / step)) + 1
    d = np.arange(n) * step
    sep2 = e.r * e.r - 2.0 * e.r * math.cos(e.alpha) * d + d * d
    hits = np.nonzero(sep2 < s * s)[0]
    if hits.size == 0:
        raise OutsideCone("no contact along the swept path")
    i = int(hits[0])
    if i == 0:
        return 0.0
    return float(d[i]) - 0.5 * step
