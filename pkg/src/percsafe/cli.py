"""Command-line interface: safety, heatmap, simulate, report, oracle.

Commands read one YAML config, honor the override flags, and write CSV
artifacts (plus rendered figures on the report path) into the output
directory. All outputs embed the config hash and the effective seed, and
reruns with identical inputs are byte-identical.
"""

from __future__ import annotations

import argparse
import sys
from dataclasses import replace
from pathlib import Path

import numpy as np

from . import __version__
from .collision import PerceptionProfile, collision_probability, frame_process_oracle
from .config import ConfigError, RunConfig, load_config, scenario_seed
from .geometry import (
    EncounterState,
    SafetyMargins,
    axis_aligned_iou,
    iou_from_shift,
    safe_travel_distance,
    shift_from_iou,
    sweep_safe_distance,
)
from .metrics import (
    IntegrationConfig,
    compare,
    heatmap,
    safety_report,
    write_heatmap_csv,
)
from .reports import (
    provenance_comments,
    safety_table,
    write_comparison_table_csv,
    write_manifest,
    write_safety_comparisons_csv,
    write_safety_csv,
    write_summary_csv,
)
from .simkit import (
    evaluate,
    generate_scenario,
    reference_evaluate,
    run_attentive,
    run_baseline,
    to_profile,
    write_log_csv,
)


def _apply_overrides(cfg: RunConfig, args) -> RunConfig:
    if args.seed is not None:
        cfg = replace(
            cfg,
            seed=args.seed,
            integration=replace(cfg.integration, seed=args.seed),
        )
    if getattr(args, "mc_samples", None) is not None:
        cfg = replace(
            cfg,
            integration=IntegrationConfig(
                method="monte_carlo",
                resolution=args.mc_samples,
                seed=cfg.integration.seed,
            ),
        )
    if getattr(args, "grid", None) is not None:
        cfg = replace(
            cfg,
            integration=IntegrationConfig(
                method="grid", resolution=args.grid, seed=cfg.integration.seed
            ),
        )
    if getattr(args, "tp_mode", None) is not None:
        cfg = replace(cfg, t_p_mode=args.tp_mode)
    if args.out is not None:
        cfg = replace(cfg, output_dir=args.out)
    return cfg


def _out_dir(cfg: RunConfig) -> Path:
    out = Path(cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    return out


def cmd_safety(cfg: RunConfig, profiles: dict[str, PerceptionProfile] | None = None) -> Path:
    """CCP/ACP for every named profile plus configured pairwise decreases."""
    out = _out_dir(cfg)
    comments = provenance_comments(cfg.config_hash, cfg.seed)
    profiles = cfg.profiles if profiles is None else profiles

    reports = {
        name: safety_report(p, cfg.margins, cfg.space_c, cfg.space_d, cfg.integration)
        for name, p in profiles.items()
    }
    write_safety_csv(reports, out / "safety.csv", comments)

    comparisons = {}
    for base, cand in cfg.comparisons:
        if base in reports and cand in reports:
            comparisons[(base, cand)] = compare(reports[base], reports[cand])
    if comparisons:
        write_safety_comparisons_csv(comparisons, out / "safety_comparisons.csv", comments)

    table = safety_table(reports)
    (out / "safety.txt").write_text(table + "\n")
    print(table)
    return out


def _heatmap_axes(cfg: RunConfig):
    spec = cfg.heatmap
    r_axis = np.linspace(*spec.r_range, spec.points)
    u_axis = np.linspace(*spec.u_range, spec.points)
    return r_axis, u_axis


def cmd_heatmap(
    cfg: RunConfig,
    baseline: PerceptionProfile | None = None,
    candidate: PerceptionProfile | None = None,
    render=None,
):
    """Collision-probability grids for a baseline/candidate pair and their
    per-cell decrease percentage, at the configured fixed angle."""
    out = _out_dir(cfg)
    comments = provenance_comments(cfg.config_hash, cfg.seed)
    spec = cfg.heatmap
    baseline = cfg.profiles[spec.baseline] if baseline is None else baseline
    candidate = cfg.profiles[spec.candidate] if candidate is None else candidate
    r_axis, u_axis = _heatmap_axes(cfg)

    base_grid = heatmap(baseline, cfg.margins, r_axis, u_axis, spec.alpha)
    cand_grid = heatmap(candidate, cfg.margins, r_axis, u_axis, spec.alpha)
    comparison = compare(base_grid, cand_grid)

    write_heatmap_csv(base_grid, out / "heatmap_baseline.csv", comments)
    write_heatmap_csv(cand_grid, out / "heatmap_candidate.csv", comments)
    write_heatmap_csv(comparison, out / "heatmap_decrease.csv", comments)
    if render:
        from .figures import render_heatmap_panels

        render_heatmap_panels(base_grid, cand_grid, comparison, out / "heatmap.png")
    return base_grid, cand_grid, comparison


def cmd_simulate(cfg: RunConfig):
    """Run baseline and attentive pipelines over all configured scenarios.

    Writes per-frame logs, per-scenario summaries, and a pooled metric
    comparison table; returns the pooled summaries and per-frame records.
    """
    out = _out_dir(cfg)
    comments = provenance_comments(cfg.config_hash, cfg.seed)
    if not cfg.scenarios:
        raise ConfigError("no scenarios configured")

    pooled = {"baseline": ([], []), "attentive": ([], [])}
    rows = []
    traces = None
    for spec in cfg.scenarios:
        seed = scenario_seed(cfg.seed, spec.name)
        scenario = generate_scenario(
            spec.kind,
            spec.width,
            spec.height,
            spec.length,
            spec.ratio_range,
            seed,
            max_step_frac=spec.max_step_frac,
        )
        base_run = run_baseline(scenario, cfg.detector)
        att_run = run_attentive(scenario, cfg.detector, cfg.attentive)
        write_log_csv(base_run.records, out / f"log_{spec.name}_baseline.csv", comments)
        write_log_csv(att_run.records, out / f"log_{spec.name}_attentive.csv", comments)
        rows.append((f"{spec.name}/baseline", base_run.summary))
        rows.append((f"{spec.name}/attentive", att_run.summary))
        for key, run in (("baseline", base_run), ("attentive", att_run)):
            pooled[key][0].extend(run.records)
            pooled[key][1].extend(scenario.gt_track)
        if traces is None:
            traces = (
                [r.inference * 1000.0 for r in base_run.records],
                [r.inference * 1000.0 for r in att_run.records],
            )

    base_summary = evaluate(pooled["baseline"][0], pooled["baseline"][1])
    att_summary = evaluate(pooled["attentive"][0], pooled["attentive"][1])
    rows.append(("pooled/baseline", base_summary))
    rows.append(("pooled/attentive", att_summary))
    write_summary_csv(rows, out / "simulate_summary.csv", comments)
    write_comparison_table_csv(
        base_summary, att_summary, out / "simulate_comparison.csv", comments
    )
    return base_summary, att_summary, traces


def cmd_report(cfg: RunConfig, render: bool = True) -> Path:
    """End-to-end bundle: simulate, derive profiles, safety, heatmap, manifest."""
    out = _out_dir(cfg)
    base_summary, att_summary, traces = cmd_simulate(cfg)

    derived = {
        "simulated_baseline": to_profile(base_summary, cfg.response_latency, cfg.t_p_mode),
        "simulated_attentive": to_profile(att_summary, cfg.response_latency, cfg.t_p_mode),
    }
    report_cfg = replace(
        cfg,
        comparisons=(("simulated_baseline", "simulated_attentive"),),
    )
    cmd_safety(report_cfg, profiles=derived)
    base_grid, cand_grid, comparison = cmd_heatmap(
        cfg,
        baseline=derived["simulated_baseline"],
        candidate=derived["simulated_attentive"],
        render=render,
    )
    if render:
        from .figures import render_latency_trace, render_safety_bars
        from .metrics import safety_report as _safety_report

        reports = {
            name: _safety_report(p, cfg.margins, cfg.space_c, cfg.space_d, cfg.integration)
            for name, p in derived.items()
        }
        render_safety_bars(reports, out / "safety.png")
        if traces is not None:
            render_latency_trace(traces[0], traces[1], out / "latency.png")
    write_manifest(out, config_hash=cfg.config_hash, seed=cfg.seed, version=__version__)
    return out


def _oracle_line(name: str, ok: bool, detail: str) -> bool:
    print(f"{'PASS' if ok else 'FAIL'}  {name}: {detail}")
    return ok


def cmd_oracle(seed: int = 0, encounters: int = 200, trials: int = 20000, configs: int = 40, cases: int = 25) -> bool:
    """Run every brute-force validator and print one pass/fail line each."""
    rng = np.random.default_rng(seed)
    ok = True

    # Closed-form safe travel distance against the stepped sphere sweep.
    worst = 0.0
    for _ in range(encounters):
        margins = SafetyMargins.from_total(rng.uniform(0.04, 0.12))
        r = rng.uniform(margins.total + 0.05, 0.9)
        a_c = np.arcsin(margins.total / r)
        e = EncounterState(
            r=r, u=1.0, alpha=float(rng.uniform(-a_c, a_c) * 0.999), margins=margins
        )
        worst = max(worst, abs(safe_travel_distance(e) - sweep_safe_distance(e, 1e-5)))
    ok &= _oracle_line(
        "safe-travel sweep", worst < 1e-3, f"max |closed - sweep| = {worst:.2e} m"
    )

    # Square-shift IoU model against direct rectangle intersection.
    worst = 0.0
    for _ in range(1000):
        s_b = rng.uniform(0.01, 0.2)
        b = rng.uniform(0.0, s_b)
        direct = axis_aligned_iou((0.0, 0.0, s_b, s_b), (b, b, s_b, s_b))
        worst = max(worst, abs(iou_from_shift(b, s_b) - direct))
    ok &= _oracle_line(
        "shift-IoU brute force", worst < 1e-9, f"max |closed - boxes| = {worst:.2e}"
    )

    # Shift <-> IoU inversion.
    worst = 0.0
    for _ in range(1000):
        s_b = rng.uniform(0.01, 0.2)
        b = rng.uniform(0.0, s_b)
        worst = max(worst, abs(shift_from_iou(iou_from_shift(b, s_b), s_b) - b) / s_b)
    ok &= _oracle_line(
        "shift-IoU roundtrip", worst < 1e-9, f"max relative roundtrip error = {worst:.2e}"
    )

    # Closed-form collision probability against the frame-process simulation.
    agree = 0
    for i in range(configs):
        margins = SafetyMargins.from_total(rng.uniform(0.04, 0.16))
        r = rng.uniform(margins.total + 0.02, 1.2)
        a_c = np.arcsin(margins.total / r)
        e = EncounterState(
            r=r,
            u=float(rng.uniform(0.05, 1.2)),
            alpha=float(rng.uniform(-a_c, a_c)),
            margins=margins,
        )
        p = PerceptionProfile(
            t_p=float(rng.uniform(0.01, 0.12)),
            t_r=float(rng.uniform(0.0, 0.25)),
            recall=float(rng.uniform(0.3, 0.995)),
            iou=float(rng.uniform(0.4, 1.0)),
        )
        closed = collision_probability(e, p)
        sim = frame_process_oracle(e, p, trials, seed=seed + 1000 + i)
        sigma = np.sqrt(closed * (1.0 - closed) / trials)
        agree += abs(sim - closed) <= 3.0 * sigma
    frac = agree / configs
    ok &= _oracle_line(
        "frame-process simulation", frac >= 0.95, f"{agree}/{configs} within 3 sigma"
    )

    # Evaluator against the exhaustive reference on random small logs.
    from .attentive import BBox, Detection
    from .simkit.runner import FrameRecord

    mismatches = 0
    for i in range(cases):
        n = int(rng.integers(1, 11))
        gt = []
        records = []
        for f in range(n):
            gt_box = BBox(
                float(rng.uniform(0, 500)), float(rng.uniform(0, 300)),
                float(rng.uniform(20, 120)), float(rng.uniform(20, 120)),
            )
            gt.append(gt_box)
            dets = []
            for d in range(int(rng.integers(0, 4))):
                dets.append(
                    Detection(
                        box=BBox(
                            gt_box.x + float(rng.uniform(-40, 40)),
                            gt_box.y + float(rng.uniform(-40, 40)),
                            gt_box.w * float(rng.uniform(0.7, 1.3)),
                            gt_box.h * float(rng.uniform(0.7, 1.3)),
                        ),
                        confidence=float(rng.uniform(0.1, 1.0)),
                    )
                )
            records.append(
                FrameRecord(
                    frame=f,
                    region=BBox(0, 0, 640, 480),
                    size=640,
                    inference=float(rng.uniform(0.005, 0.05)),
                    overhead=0.006,
                    detections=tuple(dets),
                    iou=0.0,
                    full_frame=True,
                )
            )
        if evaluate(records, gt) != reference_evaluate(records, gt):
            mismatches += 1
    ok &= _oracle_line(
        "evaluator reference", mismatches == 0, f"{cases - mismatches}/{cases} exact"
    )
    return bool(ok)


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="percsafe",
        description="Perception-to-safety metric workbench and pipeline simulator.",
    )
    parser.add_argument("--version", action="version", version=f"percsafe {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_common(p, config_required=True):
        p.add_argument("--config", required=config_required, help="YAML run configuration")
        p.add_argument("--seed", type=int, default=None, help="override the run seed")
        p.add_argument("--out", default=None, help="override the output directory")

    p_safety = sub.add_parser("safety", help="CCP/ACP for every configured profile")
    add_common(p_safety)
    p_safety.add_argument("--mc-samples", type=int, default=None,
                          help="use Monte Carlo with this many samples")
    p_safety.add_argument("--grid", type=int, default=None,
                          help="use grid quadrature with this many points per axis")

    p_heat = sub.add_parser("heatmap", help="collision-probability grids and decrease map")
    add_common(p_heat)
    p_heat.add_argument("--figures", action="store_true",
                        help="also render the grids as a PNG")

    p_sim = sub.add_parser("simulate", help="run baseline and attentive pipelines")
    add_common(p_sim)

    p_rep = sub.add_parser("report", help="end-to-end bundle with manifest and figures")
    add_common(p_rep)
    p_rep.add_argument("--mc-samples", type=int, default=None)
    p_rep.add_argument("--grid", type=int, default=None)
    p_rep.add_argument("--tp-mode", choices=("total", "inference"), default=None)
    p_rep.add_argument("--no-figures", action="store_true",
                       help="skip PNG rendering")

    p_orc = sub.add_parser("oracle", help="run all brute-force validators")
    p_orc.add_argument("--seed", type=int, default=0)
    p_orc.add_argument("--encounters", type=int, default=200)
    p_orc.add_argument("--trials", type=int, default=20000)
    p_orc.add_argument("--configs", type=int, default=40)
    p_orc.add_argument("--cases", type=int, default=25)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)

    if args.command == "oracle":
        ok = cmd_oracle(
            seed=args.seed,
            encounters=args.encounters,
            trials=args.trials,
            configs=args.configs,
            cases=args.cases,
        )
        return 0 if ok else 1

    try:
        cfg = _apply_overrides(load_config(args.config), args)
        if args.command == "safety":
            cmd_safety(cfg)
        elif args.command == "heatmap":
            cmd_heatmap(cfg, render=args.figures)
        elif args.command == "simulate":
            cmd_simulate(cfg)
        elif args.command == "report":
            cmd_report(cfg, render=not args.no_figures)
    except ConfigError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    except FileNotFoundError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2
    return 0


def entry() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entry()
