"""Synthetic scenario, detector, and evaluation toolkit.

Generates ground-truth tracks, realises a statistically parameterised
detector ensemble over them, runs full-frame and attentive pipelines, and
scores the logs with a COCO-protocol-style evaluator.
"""

from .scenario import Scenario, generate_scenario
from .detector import SyntheticDetectorSpec, SyntheticDetector, synthetic_detect
from .runner import FrameRecord, RunResult, run_attentive, run_baseline, write_log_csv
from .evaluation import (
    COCO_IOU_THRESHOLDS,
    EvalSummary,
    evaluate,
    reference_evaluate,
    to_profile,
)

__all__ = [
    "COCO_IOU_THRESHOLDS",
    "EvalSummary",
    "FrameRecord",
    "RunResult",
    "Scenario",
    "SyntheticDetector",
    "SyntheticDetectorSpec",
    "evaluate",
    "generate_scenario",
    "reference_evaluate",
    "run_attentive",
    "run_baseline",
    "synthetic_detect",
    "to_profile",
    "write_log_csv",
]
