"""Report emission helpers: CSV tables, human-readable tables, manifests.

Every file starts with comment lines embedding the config hash and seed so
published numbers can be traced to the exact run that produced them.
Nothing here writes timestamps; reruns are byte-identical.
"""

from __future__ import annotations

import csv
import hashlib
import json
from pathlib import Path
from typing import Mapping, Sequence

from .metrics import SafetyComparison, SafetyReport
from .simkit.evaluation import EvalSummary


def provenance_comments(config_hash: str, seed: int) -> list[str]:
    return [f"config_hash={config_hash}", f"seed={seed}"]


def write_safety_csv(
    reports: Mapping[str, SafetyReport],
    path,
    comments: Sequence[str] = (),
) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["profile", "ccp", "ccp_stderr", "acp", "acp_stderr",
             "method", "resolution", "integration_seed"]
        )
        for name, report in reports.items():
            writer.writerow(
                [
                    name,
                    repr(report.ccp.value),
                    "" if report.ccp.stderr is None else repr(report.ccp.stderr),
                    repr(report.acp.value),
                    "" if report.acp.stderr is None else repr(report.acp.stderr),
                    report.config.method,
                    report.config.resolution,
                    report.config.seed,
                ]
            )


def write_safety_comparisons_csv(
    comparisons: Mapping[tuple[str, str], SafetyComparison],
    path,
    comments: Sequence[str] = (),
) -> None:
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["base", "candidate", "ccp_decrease_pct", "acp_decrease_pct",
             "ccp_candidate_worse", "acp_candidate_worse"]
        )
        for (base, cand), cmp_result in comparisons.items():
            writer.writerow(
                [
                    base,
                    cand,
                    repr(cmp_result.ccp_decrease_pct),
                    repr(cmp_result.acp_decrease_pct),
                    int(cmp_result.ccp_candidate_worse),
                    int(cmp_result.acp_candidate_worse),
                ]
            )


def safety_table(reports: Mapping[str, SafetyReport]) -> str:
    """Fixed-width table for terminal output."""
    lines = [f"{'profile':<24} {'CCP':>12} {'ACP':>14} {'method':>12}"]
    for name, report in reports.items():
        lines.append(
            f"{name:<24} {report.ccp.value:>12.6g} {report.acp.value:>14.6g} "
            f"{report.config.method:>12}"
        )
    return "\n".join(lines)


def write_summary_csv(
    rows: Sequence[tuple[str, EvalSummary]],
    path,
    comments: Sequence[str] = (),
) -> None:
    """EvalSummary rows (one per run variant), timing in milliseconds."""
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(
            ["run", "inference_ms", "total_ms", "overhead_ms",
             "ar_pct", "mean_iou", "ap50_pct", "ap75_pct", "frames"]
        )
        for name, s in rows:
            writer.writerow(
                [
                    name,
                    repr(s.inference_time), repr(s.total_time), repr(s.overhead_time),
                    repr(s.ar), repr(s.mean_iou), repr(s.ap50), repr(s.ap75),
                    s.n_frames,
                ]
            )


def change_pct(base: float, ours: float) -> float:
    """Signed percentage change from base to ours (negative is a reduction)."""
    if base == 0.0:
        return 0.0
    return 100.0 * (ours - base) / base


def write_comparison_table_csv(
    base: EvalSummary,
    ours: EvalSummary,
    path,
    comments: Sequence[str] = (),
) -> None:
    """Metric-per-row comparison of a baseline run and an attentive run."""
    rows = [
        ("inference_ms", base.inference_time, ours.inference_time),
        ("total_ms", base.total_time, ours.total_time),
        ("overhead_ms", base.overhead_time, ours.overhead_time),
        ("ar_pct", base.ar, ours.ar),
        ("mean_iou", base.mean_iou, ours.mean_iou),
        ("ap50_pct", base.ap50, ours.ap50),
        ("ap75_pct", base.ap75, ours.ap75),
    ]
    with open(path, "w", newline="") as fh:
        for line in comments:
            fh.write(f"# {line}\n")
        writer = csv.writer(fh)
        writer.writerow(["metric", "baseline", "ours", "change_pct"])
        for name, b, o in rows:
            writer.writerow([name, repr(b), repr(o), repr(change_pct(b, o))])


def file_sha256(path) -> str:
    return hashlib.sha256(Path(path).read_bytes()).hexdigest()


def write_manifest(out_dir, *, config_hash: str, seed: int, version: str) -> Path:
    """Manifest of every artifact in the bundle with its content hash."""
    out_dir = Path(out_dir)
    files = {
        p.name: file_sha256(p)
        for p in sorted(out_dir.iterdir())
        if p.is_file() and p.name != "manifest.json"
    }
    manifest = {
        "config_hash": config_hash,
        "seed": seed,
        "version": version,
        "files": files,
    }
    path = out_dir / "manifest.json"
    path.write_text(json.dumps(manifest, indent=2, sort_keys=True) + "\n")
    return path
