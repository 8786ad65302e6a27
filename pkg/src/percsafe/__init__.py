"""percsafe: perception metrics to human-robot collision-safety metrics.

A workbench that converts detector characteristics (recall, IoU, latency)
into collision-probability fields and the CCP/ACP safety metrics, plus a
simulator of an attentive-processing detection pipeline that produces those
characteristics from synthetic scenarios.
"""

from .geometry import (
    AlreadyInContact,
    EncounterState,
    GeometryError,
    OutsideCone,
    SafetyMargins,
    ShiftModel,
    Vec3,
    alpha_critical,
    axis_aligned_iou,
    effective_safe_distance,
    encounter_from_vectors,
    iou_from_shift,
    safe_travel_distance,
    shift_from_iou,
    sweep_safe_distance,
)
from .collision import (
    FrameBudget,
    PerceptionProfile,
    ZeroSpeed,
    collision_probability,
    frame_budget,
    frame_process_oracle,
    geometric_tail,
    total_latency,
)
from .metrics import (
    AxisMismatch,
    Estimate,
    HeatmapComparison,
    HeatmapGrid,
    IntegrationConfig,
    NoImprovement,
    ParamSpaceC,
    ParamSpaceD,
    SafetyComparison,
    SafetyReport,
    acp,
    calibrate_margins,
    ccp,
    compare,
    heatmap,
    probability_field,
    safety_report,
)
from .attentive import (
    AttentiveState,
    BBox,
    CropSpec,
    CropTransform,
    Detection,
    EnsembleSpec,
    FrameMeta,
    ModelProfile,
    attentive_region,
    map_back,
    optimize_aggregation,
    select_network,
    step,
)

__version__ = "0.1.0"
