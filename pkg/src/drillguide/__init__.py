"""Distance-field guided voxel drilling.

The package turns a labeled voxel volume into per-voxel drilling guidance
(signed distance fields, safety zones, proximity colors), simulates a
drill over that guidance with a deterministic fixed-timestep engine, and
scores the resulting removal logs. A small HTTP + websocket service
exposes the same engine to interactive clients.
"""

from . import errors
from .volume import (
    GridSpec,
    LabelVolume,
    BinaryMask,
    mask_of,
    boundary_of,
    save_volume,
    load_volume,
)
from .distance import (
    DistanceField,
    CompositeField,
    edt_squared,
    exact_edt,
    signed_edt,
    compose_min,
    save_field,
    load_field,
)
from .guidance import (
    Zone,
    ShellParams,
    ColorStops,
    ZonePlan,
    build_plan,
    plan_counts,
    blend_color,
    save_plan,
    load_plan,
)
from .engine import (
    DrillConfig,
    DrillState,
    TickOutput,
    WarningLevel,
    PoseSample,
    tick,
    run_trajectory,
    save_trajectory,
    load_trajectory,
    config_from_doc,
)
from .metrics import (
    RemovalEvent,
    BreachEvent,
    SessionMetrics,
    PairedTTestResult,
    write_event_log,
    read_event_log,
    detect_breaches,
    completion_rates,
    drill_time,
    paired_t_one_sided,
    session_metrics,
    session_report,
)
from .phantom import SlabCase, make_slab_case, write_case_dir

__version__ = "0.1.0"

__all__ = [
    "errors",
    "GridSpec", "LabelVolume", "BinaryMask", "mask_of", "boundary_of",
    "save_volume", "load_volume",
    "DistanceField", "CompositeField", "edt_squared", "exact_edt",
    "signed_edt", "compose_min", "save_field", "load_field",
    "Zone", "ShellParams", "ColorStops", "ZonePlan", "build_plan",
    "plan_counts", "blend_color", "save_plan", "load_plan",
    "DrillConfig", "DrillState", "TickOutput", "WarningLevel", "PoseSample",
    "tick", "run_trajectory", "save_trajectory", "load_trajectory",
    "config_from_doc",
    "RemovalEvent", "BreachEvent", "SessionMetrics", "PairedTTestResult",
    "write_event_log", "read_event_log", "detect_breaches",
    "completion_rates", "drill_time", "paired_t_one_sided",
    "session_metrics", "session_report",
    "SlabCase", "make_slab_case", "write_case_dir",
    "__version__",
]
