"""Expectations of the collision probability over parameter spaces.

CCP averages the collision probability over critical close-range conditions
inside the collision cone; ACP averages it over the full operating envelope.
Both come with a deterministic midpoint-grid quadrature and a seeded
Monte-Carlo estimator, plus heatmap fields, baseline-vs-candidate decrease
percentages, and a margin-sum calibration against target metric values.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, replace
from typing import Sequence

import numpy as np

from .collision import FLOOR_EPS, PerceptionProfile
from .geometry import SQRT2, SafetyMargins, shift_from_iou


class AxisMismatch(ValueError):
    """Grids under comparison do not share axes or slice angle."""


class NoImprovement(RuntimeError):
    """Calibration residual is flat over the search range."""


@dataclass(frozen=True)
class ParamSpaceD:
    """Applicable operating envelope: independent uniform ranges.

    ``t_r`` optionally pins the response latency used during evaluation;
    when None the profile's own response latency applies.
    """

    alpha_range: tuple[float, float] = (-math.pi, math.pi)
    r_range: tuple[float, float] = (0.25, 1.5)
    u_range: tuple[float, float] = (0.02, 1.0)
    t_r: float | None = None

    def __post_init__(self):
        for name, (lo, hi) in (
            ("alpha_range", self.alpha_range),
            ("r_range", self.r_range),
            ("u_range", self.u_range),
        ):
            if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
                raise ValueError(f"{name} must be a non-empty ordered interval")


@dataclass(frozen=True)
class ParamSpaceC:
    """Critical conditions: hierarchical region inside the collision cone.

    For each speed u the distance ranges over [r_lower, max(r_lower,
    horizon*u)] (a point mass at r_lower when the interval degenerates), and
    the angle covers the full critical cone at that distance.
    """

    u_range: tuple[float, float] = (0.02, 1.0)
    r_lower: float = 0.25
    horizon: float = 0.5

    def __post_init__(self):
        lo, hi = self.u_range
        if not (math.isfinite(lo) and math.isfinite(hi) and lo < hi):
            raise ValueError("u_range must be a non-empty ordered interval")
        if not (self.r_lower > 0.0 and self.horizon >= 0.0):
            raise ValueError("r_lower must be positive and horizon non-negative")


@dataclass(frozen=True)
class IntegrationConfig:
    """Estimator choice: midpoint grid (points per axis) or Monte Carlo."""

    method: str = "grid"
    resolution: int = 64
    seed: int = 0

    def __post_init__(self):
        if self.method not in ("grid", "monte_carlo"):
            raise ValueError(f"unknown integration method {self.method!r}")
        minimum = 2 if self.method == "grid" else 1
        if self.resolution < minimum:
            raise ValueError(
                f"resolution must be >= {minimum} for {self.method}, "
                f"got {self.resolution}"
            )


@dataclass(frozen=True)
class Estimate:
    """An expectation estimate with Monte-Carlo standard error when available."""

    value: float
    stderr: float | None
    n: int


@dataclass(frozen=True)
class SafetyReport:
    """CCP/ACP pair with the estimator configuration that produced it."""

    ccp: Estimate
    acp: Estimate
    config: IntegrationConfig


@dataclass(frozen=True, eq=False)
class HeatmapGrid:
    """Collision probability over a distance/speed grid at a fixed angle.

    ``values[i, j]`` is the probability at ``(r_axis[i], u_axis[j])``.
    """

    r_axis: np.ndarray
    u_axis: np.ndarray
    values: np.ndarray
    alpha: float

    def __post_init__(self):
        if self.values.shape != (len(self.r_axis), len(self.u_axis)):
            raise ValueError("values shape does not match axes")
        if np.any(self.values < 0.0) or np.any(self.values > 1.0):
            raise ValueError("heatmap values must lie in [0, 1]")


@dataclass(frozen=True, eq=False)
class HeatmapComparison:
    """Per-cell decrease percentage of a candidate grid against a base grid.

    Cells where the base probability is zero but the candidate is not carry
    NaN and are flagged in ``candidate_worse``.
    """

    r_axis: np.ndarray
    u_axis: np.ndarray
    alpha: float
    decrease_pct: np.ndarray
    candidate_worse: np.ndarray


@dataclass(frozen=True)
class SafetyComparison:
    """Decrease percentages of candidate CCP/ACP against a base report."""

    ccp_decrease_pct: float
    acp_decrease_pct: float
    ccp_candidate_worse: bool
    acp_candidate_worse: bool


def probability_field(
    r: np.ndarray,
    u: np.ndarray,
    alpha: np.ndarray,
    margins: SafetyMargins,
    profile: PerceptionProfile,
    t_r: float | None = None,
) -> np.ndarray:
    """Vectorised collision probability over broadcastable arrays.

    Mirrors :func:`percsafe.collision.collision_probability` cell by cell;
    radicand rounding dust inside the cone is clamped to zero.
    """
    r = np.asarray(r, dtype=float)
    u = np.asarray(u, dtype=float)
    alpha = np.asarray(alpha, dtype=float)
    r, u, alpha = np.broadcast_arrays(r, u, alpha)

    s = margins.total
    resp = profile.t_r if t_r is None else t_r
    b = shift_from_iou(profile.iou, margins.s_b)

    contact = r <= s
    moving = u > 0.0
    with np.errstate(invalid="ignore", divide="ignore"):
        alpha_c = np.arcsin(np.clip(np.where(contact, 1.0, s / np.maximum(r, s)), 0.0, 1.0))
        in_cone = np.abs(alpha) <= alpha_c

        sin2 = np.sin(alpha) ** 2
        rad = np.maximum(s * s - r * r * sin2, 0.0)
        distance = r * np.cos(alpha) - np.sqrt(rad)
        inner = (s + SQRT2 * b) ** 2 - r * r * sin2
        penalty = np.sqrt(np.maximum(inner, 0.0)) - np.sqrt(rad)
        l_s = np.maximum(0.0, distance - penalty - u * resp)

        q = l_s / np.where(moving, u * profile.t_p, 1.0)
        m = np.floor(q * (1.0 + FLOOR_EPS))
        p_c = (1.0 - profile.recall) ** m

    out = np.where(in_cone & moving, p_c, 0.0)
    out = np.where(contact, 1.0, out)
    return out


def _midpoints(lo, hi, n: int) -> np.ndarray:
    edges = np.linspace(lo, hi, n + 1)
    return 0.5 * (edges[:-1] + edges[1:])


def acp(
    p: PerceptionProfile,
    margins: SafetyMargins,
    d: ParamSpaceD,
    cfg: IntegrationConfig,
) -> Estimate:
    """Average collision probability over the operating envelope.

    The expectation is taken under the uniform product law on the three
    ranges of ``d``.
    """
    if cfg.method == "grid":
        n = cfg.resolution
        a = _midpoints(*d.alpha_range, n)
        r = _midpoints(*d.r_range, n)
        u = _midpoints(*d.u_range, n)
        field = probability_field(
            r[:, None, None], u[None, :, None], a[None, None, :],
            margins, p, t_r=d.t_r,
        )
        return Estimate(value=float(field.mean()), stderr=None, n=field.size)

    rng = np.random.default_rng(cfg.seed)
    n = cfg.resolution
    a = rng.uniform(*d.alpha_range, n)
    r = rng.uniform(*d.r_range, n)
    u = rng.uniform(*d.u_range, n)
    samples = probability_field(r, u, a, margins, p, t_r=d.t_r)
    stderr = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return Estimate(value=float(samples.mean()), stderr=stderr, n=n)


def _c_upper_r(c: ParamSpaceC, u: np.ndarray) -> np.ndarray:
    return np.maximum(c.r_lower, c.horizon * u)


def _cone_half_angle(r: np.ndarray, margins: SafetyMargins) -> np.ndarray:
    # Contact cells get pi/2; their probability is 1 regardless of the angle.
    s = margins.total
    return np.arcsin(np.clip(np.where(r <= s, 1.0, s / np.maximum(r, s)), 0.0, 1.0))


def ccp(
    p: PerceptionProfile,
    margins: SafetyMargins,
    c: ParamSpaceC,
    cfg: IntegrationConfig,
) -> Estimate:
    """Average collision probability under critical conditions.

    Hierarchical uniform law: speed uniform on its range, distance uniform on
    [r_lower, max(r_lower, horizon*u)], angle uniform over the full critical
    cone at that distance.
    """
    if cfg.method == "grid":
        n = cfg.resolution
        u = _midpoints(*c.u_range, n)                       # (n,)
        r_hi = _c_upper_r(c, u)
        frac = (np.arange(n) + 0.5) / n
        r = c.r_lower + frac[None, :] * (r_hi - c.r_lower)[:, None]  # (n, n)
        a_c = _cone_half_angle(r, margins)
        a = (2.0 * frac[None, None, :] - 1.0) * a_c[:, :, None]      # (n, n, n)
        field = probability_field(
            r[:, :, None], u[:, None, None], a, margins, p,
        )
        return Estimate(value=float(field.mean()), stderr=None, n=field.size)

    rng = np.random.default_rng(cfg.seed)
    n = cfg.resolution
    u = rng.uniform(*c.u_range, n)
    r_hi = _c_upper_r(c, u)
    r = c.r_lower + rng.random(n) * (r_hi - c.r_lower)
    a_c = _cone_half_angle(r, margins)
    a = (2.0 * rng.random(n) - 1.0) * a_c
    samples = probability_field(r, u, a, margins, p)
    stderr = float(samples.std(ddof=1) / math.sqrt(n)) if n > 1 else float("inf")
    return Estimate(value=float(samples.mean()), stderr=stderr, n=n)


def safety_report(
    p: PerceptionProfile,
    margins: SafetyMargins,
    c: ParamSpaceC,
    d: ParamSpaceD,
    cfg: IntegrationConfig,
) -> SafetyReport:
    """Compute both safety metrics for one profile."""
    return SafetyReport(
        ccp=ccp(p, margins, c, cfg),
        acp=acp(p, margins, d, cfg),
        config=cfg,
    )


def heatmap(
    p: PerceptionProfile,
    margins: SafetyMargins,
    r_axis: Sequence[float],
    u_axis: Sequence[float],
    alpha: float = 0.0,
) -> HeatmapGrid:
    """Collision probability over a distance/speed grid at a fixed angle."""
    r = np.asarray(r_axis, dtype=float)
    u = np.asarray(u_axis, dtype=float)
    for name, ax in (("r_axis", r), ("u_axis", u)):
        if ax.ndim != 1 or len(ax) < 1 or np.any(np.diff(ax) <= 0.0):
            raise ValueError(f"{name} must be a strictly ascending 1-D axis")
    values = probability_field(r[:, None], u[None, :], alpha, margins, p)
    return HeatmapGrid(r_axis=r, u_axis=u, values=values, alpha=alpha)


def _decrease_pct(base: np.ndarray, cand: np.ndarray):
    positive = base > 0.0
    worse = (base == 0.0) & (cand > 0.0)
    pct = np.where(
        positive,
        100.0 * (base - cand) / np.where(positive, base, 1.0),
        0.0,
    )
    pct = np.where(worse, np.nan, pct)
    return pct, worse


def compare(base, cand):
    """Decrease percentage of a candidate against a base.

    Accepts a pair of :class:`HeatmapGrid` (per-cell comparison) or a pair of
    :class:`SafetyReport` (per-metric comparison). Positive percentages mean
    the candidate is safer; cells/metrics where the base is zero but the
    candidate is not are flagged instead of divided.
    """
    if isinstance(base, HeatmapGrid) and isinstance(cand, HeatmapGrid):
        if (
            len(base.r_axis) != len(cand.r_axis)
            or len(base.u_axis) != len(cand.u_axis)
            or not np.array_equal(base.r_axis, cand.r_axis)
            or not np.array_equal(base.u_axis, cand.u_axis)
            or base.alpha != cand.alpha
        ):
            raise AxisMismatch("heatmaps do not share axes and slice angle")
        pct, worse = _decrease_pct(base.values, cand.values)
        return HeatmapComparison(
            r_axis=base.r_axis,
            u_axis=base.u_axis,
            alpha=base.alpha,
            decrease_pct=pct,
            candidate_worse=worse,
        )
    if isinstance(base, SafetyReport) and isinstance(cand, SafetyReport):
        pct, worse = _decrease_pct(
            np.array([base.ccp.value, base.acp.value]),
            np.array([cand.ccp.value, cand.acp.value]),
        )
        return SafetyComparison(
            ccp_decrease_pct=float(pct[0]),
            acp_decrease_pct=float(pct[1]),
            ccp_candidate_worse=bool(worse[0]),
            acp_candidate_worse=bool(worse[1]),
        )
    raise TypeError("compare() takes two HeatmapGrid or two SafetyReport")


@dataclass(frozen=True, eq=False)
class CalibrationResult:
    """Best-fit combined margin against target CCP/ACP values."""

    margins: SafetyMargins
    margins_sum: float
    residual: float
    scanned_sums: np.ndarray
    scanned_residuals: np.ndarray


def calibrate_margins(
    targets: Sequence[tuple[float | None, float | None]],
    profiles: Sequence[PerceptionProfile],
    search_range: tuple[float, float],
    c: ParamSpaceC | None = None,
    d: ParamSpaceD | None = None,
    cfg: IntegrationConfig | None = None,
    points: int = 41,
) -> CalibrationResult:
    """Recover the combined safety margin that best reproduces target metrics.

    ``targets[i]`` is a (ccp, acp) pair for ``profiles[i]``; either entry may
    be None to skip it. The scan minimises the summed squared relative error
    over a dense grid of margin sums (split equally between the two agents),
    so CCP-scale and ACP-scale targets contribute comparably.
    """
    if len(targets) == 0 or len(targets) != len(profiles):
        raise ValueError("targets and profiles must be equal-length and non-empty")
    lo, hi = search_range
    if not (math.isfinite(lo) and math.isfinite(hi) and 0.0 < lo < hi):
        raise ValueError(f"empty or invalid search range ({lo}, {hi})")
    if points < 2:
        raise ValueError("points must be at least 2")
    c = c or ParamSpaceC()
    d = d or ParamSpaceD()
    cfg = cfg or IntegrationConfig()

    sums = np.linspace(lo, hi, points)
    residuals = np.empty(points)
    for i, total in enumerate(sums):
        margins = SafetyMargins.from_total(float(total))
        err = 0.0
        for (ccp_target, acp_target), profile in zip(targets, profiles):
            if ccp_target is not None:
                est = ccp(profile, margins, c, cfg).value
                err += ((est - ccp_target) / ccp_target) ** 2
            if acp_target is not None:
                est = acp(profile, margins, d, cfg).value
                err += ((est - acp_target) / acp_target) ** 2
        residuals[i] = err

    spread = float(residuals.max() - residuals.min())
    if not (spread > 1e-12 * max(1.0, float(residuals.max()))):
        raise NoImprovement("residual is flat over the search range")
    best = int(np.argmin(residuals))
    return CalibrationResult(
        margins=SafetyMargins.from_total(float(sums[best])),
        margins_sum=float(sums[best]),
        residual=float(residuals[best]),
        scanned_sums=sums,
        scanned_residuals=residuals,
    )


def write_heatmap_csv(
    grid: HeatmapGrid | HeatmapComparison,
    path,
    comments: Sequence[str] = (),
) -> None:
    """Write a grid as CSV with the speed axis as header row and the distance
    axis as the leading column; values are row-major."""
    values = grid.values if isinstance(grid, HeatmapGrid) else grid.decrease_pct
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        fh.write(f"# alpha={grid.alpha!r}\n")
        writer = csv.writer(fh)
        writer.writerow(["r\\u"] + [repr(float(v)) for v in grid.u_axis])
        for i, r_val in enumerate(grid.r_axis):
            writer.writerow(
                [repr(float(r_val))] + [repr(float(v)) for v in values[i]]
            )


def read_heatmap_csv(path) -> tuple[np.ndarray, np.ndarray, np.ndarray, float]:
    """Inverse of :func:`write_heatmap_csv`; returns (r_axis, u_axis, values, alpha)."""
    alpha = 0.0
    rows = []
    with open(path, newline="") as fh:
        for raw in fh:
            if raw.startswith("#"):
                if raw.startswith("# alpha="):
                    alpha = float(raw.split("=", 1)[1])
                continue
            rows.append(next(csv.reader([raw])))
    u_axis = np.array([float(v) for v in rows[0][1:]])
    r_axis = np.array([float(row[0]) for row in rows[1:]])
    values = np.array([[float(v) for v in row[1:]] for row in rows[1:]])
    return r_axis, u_axis, values, alpha
