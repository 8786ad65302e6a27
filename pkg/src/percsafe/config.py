"""Run configuration: YAML ingestion, validation, and hashing.

All internal values are SI (meters, seconds, m/s). Latency-like fields in
the config file must carry an explicit unit suffix ("40.599 ms", "0.1 s");
bare numbers are rejected so millisecond/second mix-ups cannot slip in.
"""

from __future__ import annotations

import hashlib
import re
from dataclasses import dataclass, field
from pathlib import Path

import yaml

from .attentive import AttentiveState, EnsembleSpec, ModelProfile
from .collision import PerceptionProfile
from .geometry import SafetyMargins
from .metrics import IntegrationConfig, ParamSpaceC, ParamSpaceD
from .simkit.detector import SyntheticDetectorSpec
from .simkit.scenario import KINDS


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


_DURATION_RE = re.compile(r"^\s*([-+0-9.eE]+)\s*(ms|s)\s*$")


def parse_duration(value, where: str) -> float:
    """Parse a unit-suffixed duration string into seconds."""
    if not isinstance(value, str):
        raise ConfigError(
            f"{where}: latency fields need an explicit unit suffix "
            f"('s' or 'ms'), got {value!r}"
        )
    match = _DURATION_RE.match(value)
    if not match:
        raise ConfigError(f"{where}: cannot parse duration {value!r}")
    try:
        number = float(match.group(1))
    except ValueError as exc:
        raise ConfigError(f"{where}: cannot parse duration {value!r}") from exc
    return number / 1000.0 if match.group(2) == "ms" else number


def _require(mapping: dict, key: str, where: str):
    if key not in mapping:
        raise ConfigError(f"{where}: missing required field {key!r}")
    return mapping[key]


def _interval(value, where: str) -> tuple[float, float]:
    if not (isinstance(value, (list, tuple)) and len(value) == 2):
        raise ConfigError(f"{where}: expected a [low, high] pair, got {value!r}")
    lo, hi = float(value[0]), float(value[1])
    if not lo < hi:
        raise ConfigError(f"{where}: interval must be ordered, got {value!r}")
    return lo, hi


@dataclass(frozen=True)
class ScenarioSpec:
    """One synthetic scenario request."""

    name: str
    kind: str
    width: int
    height: int
    length: int
    ratio_range: tuple[float, float]
    max_step_frac: float = 0.3


@dataclass(frozen=True)
class HeatmapSpec:
    """Axes and profile pairing for the heatmap command."""

    r_range: tuple[float, float]
    u_range: tuple[float, float]
    points: int
    alpha: float
    baseline: str
    candidate: str


@dataclass(frozen=True)
class RunConfig:
    """Everything a command needs, with the source hash for provenance."""

    seed: int
    output_dir: str
    margins: SafetyMargins
    profiles: dict[str, PerceptionProfile]
    comparisons: tuple[tuple[str, str], ...]
    space_c: ParamSpaceC
    space_d: ParamSpaceD
    integration: IntegrationConfig
    heatmap: HeatmapSpec
    ensemble: EnsembleSpec
    detector: SyntheticDetectorSpec
    attentive: AttentiveState
    scenarios: tuple[ScenarioSpec, ...]
    t_p_mode: str
    response_latency: float
    config_hash: str = field(default="", compare=False)


def _parse_profiles(raw: dict) -> dict[str, PerceptionProfile]:
    profiles = {}
    for name, entry in raw.items():
        where = f"profiles.{name}"
        if not isinstance(entry, dict):
            raise ConfigError(f"{where}: expected a mapping")
        try:
            profiles[name] = PerceptionProfile(
                t_p=parse_duration(_require(entry, "t_p", where), f"{where}.t_p"),
                t_r=parse_duration(_require(entry, "t_r", where), f"{where}.t_r"),
                recall=float(_require(entry, "recall", where)),
                iou=float(_require(entry, "iou", where)),
            )
        except ValueError as exc:
            raise ConfigError(f"{where}: {exc}") from exc
    return profiles


def _parse_ensemble(raw: dict) -> EnsembleSpec:
    where = "ensemble"
    sizes = tuple(int(s) for s in _require(raw, "sizes", where))
    if "latencies" in raw:
        latencies = {
            int(size): parse_duration(text, f"{where}.latencies[{size}]")
            for size, text in raw["latencies"].items()
        }
        recall_step = float(raw.get("recall_step", -0.005))
        iou_step = float(raw.get("iou_step", -0.005))
        ordered = tuple(sorted(sizes))
        profiles = {}
        for i, size in enumerate(ordered):
            if size not in latencies:
                raise ConfigError(f"{where}.latencies: missing size {size}")
            steps_below = len(ordered) - 1 - i
            profiles[size] = ModelProfile(
                latency=latencies[size],
                recall_delta=recall_step * steps_below,
                iou_delta=iou_step * steps_below,
            )
        return EnsembleSpec(sizes=ordered, profiles=profiles)
    full_latency = parse_duration(
        _require(raw, "full_latency", where), f"{where}.full_latency"
    )
    return EnsembleSpec.scaled(
        full_latency=full_latency,
        sizes=sizes,
        exponent=float(raw.get("latency_exponent", 2.0)),
        recall_step=float(raw.get("recall_step", -0.005)),
        iou_step=float(raw.get("iou_step", -0.005)),
    )


def _parse_scenarios(raw: list) -> tuple[ScenarioSpec, ...]:
    specs = []
    for i, entry in enumerate(raw):
        where = f"scenarios[{i}]"
        kind = str(_require(entry, "kind", where))
        if kind not in KINDS:
            raise ConfigError(f"{where}.kind: unknown kind {kind!r}")
        specs.append(
            ScenarioSpec(
                name=str(_require(entry, "name", where)),
                kind=kind,
                width=int(_require(entry, "width", where)),
                height=int(_require(entry, "height", where)),
                length=int(_require(entry, "length", where)),
                ratio_range=_interval(_require(entry, "ratio", where), f"{where}.ratio"),
                max_step_frac=float(entry.get("max_step_frac", 0.3)),
            )
        )
    names = [s.name for s in specs]
    if len(set(names)) != len(names):
        raise ConfigError("scenarios: names must be unique")
    return tuple(specs)


def load_config(path: str | Path) -> RunConfig:
    """Load and validate a YAML run configuration."""
    path = Path(path)
    raw_bytes = path.read_bytes()
    try:
        raw = yaml.safe_load(raw_bytes)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: not valid YAML: {exc}") from exc
    if not isinstance(raw, dict):
        raise ConfigError(f"{path}: top level must be a mapping")

    margins_raw = _require(raw, "margins", "config")
    try:
        margins = SafetyMargins(
            s_a=float(_require(margins_raw, "s_a", "margins")),
            s_b=float(_require(margins_raw, "s_b", "margins")),
        )
    except ValueError as exc:
        raise ConfigError(f"margins: {exc}") from exc

    profiles = _parse_profiles(_require(raw, "profiles", "config"))

    comparisons = []
    for i, entry in enumerate(raw.get("comparisons", [])):
        where = f"comparisons[{i}]"
        base = str(_require(entry, "base", where))
        cand = str(_require(entry, "candidate", where))
        for name in (base, cand):
            if name not in profiles:
                raise ConfigError(f"{where}: unknown profile {name!r}")
        comparisons.append((base, cand))

    d_raw = raw.get("space_d", {})
    space_d = ParamSpaceD(
        alpha_range=_interval(d_raw.get("alpha", [-3.141592653589793, 3.141592653589793]), "space_d.alpha"),
        r_range=_interval(d_raw.get("r", [0.25, 1.5]), "space_d.r"),
        u_range=_interval(d_raw.get("u", [0.02, 1.0]), "space_d.u"),
        t_r=(
            parse_duration(d_raw["t_r"], "space_d.t_r")
            if "t_r" in d_raw
            else None
        ),
    )
    c_raw = raw.get("space_c", {})
    space_c = ParamSpaceC(
        u_range=_interval(c_raw.get("u", [0.02, 1.0]), "space_c.u"),
        r_lower=float(c_raw.get("r_lower", 0.25)),
        horizon=(
            parse_duration(c_raw["horizon"], "space_c.horizon")
            if "horizon" in c_raw
            else 0.5
        ),
    )

    integ_raw = raw.get("integration", {})
    try:
        integration = IntegrationConfig(
            method=str(integ_raw.get("method", "grid")),
            resolution=int(integ_raw.get("resolution", 64)),
            seed=int(integ_raw.get("seed", raw.get("seed", 0))),
        )
    except ValueError as exc:
        raise ConfigError(f"integration: {exc}") from exc

    heat_raw = _require(raw, "heatmap", "config")
    heatmap_spec = HeatmapSpec(
        r_range=_interval(_require(heat_raw, "r", "heatmap"), "heatmap.r"),
        u_range=_interval(_require(heat_raw, "u", "heatmap"), "heatmap.u"),
        points=int(heat_raw.get("points", 100)),
        alpha=float(heat_raw.get("alpha", 0.0)),
        baseline=str(_require(heat_raw, "baseline", "heatmap")),
        candidate=str(_require(heat_raw, "candidate", "heatmap")),
    )
    for name in (heatmap_spec.baseline, heatmap_spec.candidate):
        if name not in profiles:
            raise ConfigError(f"heatmap: unknown profile {name!r}")
    if heatmap_spec.points < 2:
        raise ConfigError("heatmap.points must be at least 2")

    ensemble = _parse_ensemble(_require(raw, "ensemble", "config"))

    det_raw = raw.get("detector", {})
    try:
        detector = SyntheticDetectorSpec(
            ensemble=ensemble,
            recall=float(det_raw.get("recall", 0.95)),
            iou_mean=float(det_raw.get("iou_mean", 0.75)),
            iou_spread=float(det_raw.get("iou_spread", 0.03)),
            latency_jitter=(
                parse_duration(det_raw["latency_jitter"], "detector.latency_jitter")
                if "latency_jitter" in det_raw
                else 0.0
            ),
            confidence_sigma=float(det_raw.get("confidence_sigma", 0.05)),
            confidence_threshold=float(det_raw.get("confidence_threshold", 0.1)),
            overhead=(
                parse_duration(det_raw["overhead"], "detector.overhead")
                if "overhead" in det_raw
                else 0.006
            ),
        )
    except ValueError as exc:
        raise ConfigError(f"detector: {exc}") from exc

    att_raw = raw.get("attentive", {})
    try:
        attentive = AttentiveState(
            expansion_rate=float(att_raw.get("expansion_rate", 2.0)),
            mode=str(att_raw.get("mode", "expansion")),
            fallback_threshold=int(att_raw.get("fallback_threshold", 1)),
        )
    except ValueError as exc:
        raise ConfigError(f"attentive: {exc}") from exc

    scenarios = _parse_scenarios(raw.get("scenarios", []))

    sim_raw = raw.get("simulate", {})
    t_p_mode = str(sim_raw.get("t_p_mode", "total"))
    if t_p_mode not in ("total", "inference"):
        raise ConfigError(f"simulate.t_p_mode must be 'total' or 'inference', got {t_p_mode!r}")
    response_latency = (
        parse_duration(sim_raw["response_latency"], "simulate.response_latency")
        if "response_latency" in sim_raw
        else 0.1
    )

    return RunConfig(
        seed=int(raw.get("seed", 0)),
        output_dir=str(raw.get("output_dir", "out")),
        margins=margins,
        profiles=profiles,
        comparisons=tuple(comparisons),
        space_c=space_c,
        space_d=space_d,
        integration=integration,
        heatmap=heatmap_spec,
        ensemble=ensemble,
        detector=detector,
        attentive=attentive,
        scenarios=scenarios,
        t_p_mode=t_p_mode,
        response_latency=response_latency,
        config_hash=hashlib.sha256(raw_bytes).hexdigest()[:16],
    )


def scenario_seed(global_seed: int, name: str) -> int:
    """Stable per-scenario seed derived from the run seed and scenario name."""
    digest = hashlib.sha256(f"{global_seed}:{name}".encode()).digest()
    return int.from_bytes(digest[:4], "big")
