"""Deterministic fixed-timestep drilling over a zone plan.

Every tick advances engine time by exactly `tick_ms`, moves the tool tip
to the commanded pose, and, when powered, removes up to a per-tick voxel
cap from the remaining material inside the spherical tip.  The cap, the
reaction force, and the audio pitch all come from the signed bone distance
at the tip, so identical pose streams always produce identical removal
logs: candidates are ordered by squared center distance with the x-fastest
linear index as tie-break, and no randomness enters anywhere.
"""

import json
import math
from dataclasses import dataclass, fields, replace
from enum import IntEnum
from pathlib import Path

import numpy as np

from .distance import DistanceField
from .errors import (
    InvalidConfig,
    MalformedRecord,
    NonFinitePose,
    NonMonotoneTimestamps,
    SpecMismatch,
)
from .fileio import canonical_json
from .guidance import Zone, ZonePlan
from .metrics import RemovalEvent

__all__ = [
    "DrillConfig",
    "DrillState",
    "TickOutput",
    "WarningLevel",
    "PoseSample",
    "tick",
    "run_trajectory",
    "save_trajectory",
    "load_trajectory",
    "config_from_doc",
]


class WarningLevel(IntEnum):
    NONE = 0
    YELLOW = 1
    RED = 2


@dataclass(frozen=True)
class DrillConfig:
    """Engine parameters.

    Removal caps are voxels per tick: `rate_cancellous` deep in bone,
    `rate_cortical` while the tip is inside the outer `cortical_shell_mm`
    of the bone (signed bone distance in [-shell, 0]).  The reaction force
    scales inversely with the active cap so hard bone feels stiff, which
    also forces rate_cortical <= rate_cancellous to keep force within
    [0, f_max_n].  Audio is `f_base_hz` plus `delta_f_hz` times a proximity
    ramp that rises from 0 at shell depth to 1 at the bone surface.
    """

    tip_diameter_mm: float = 4.0
    tick_ms: int = 5
    rate_cancellous: int = 10
    rate_cortical: int = 1
    f_max_n: float = 3.2
    f_base_hz: float = 220.0
    delta_f_hz: float = 220.0
    cortical_shell_mm: float = 1.5

    def __post_init__(self):
        if not (self.tip_diameter_mm > 0 and math.isfinite(self.tip_diameter_mm)):
            raise ValueError(f"tip_diameter_mm must be > 0, got {self.tip_diameter_mm}")
        if not (isinstance(self.tick_ms, int) and self.tick_ms >= 1):
            raise ValueError(f"tick_ms must be an int >= 1, got {self.tick_ms!r}")
        for name in ("rate_cancellous", "rate_cortical"):
            rate = getattr(self, name)
            if not (isinstance(rate, int) and rate >= 1):
                raise ValueError(f"{name} must be an int >= 1, got {rate!r}")
        if self.rate_cortical > self.rate_cancellous:
            raise ValueError("rate_cortical must not exceed rate_cancellous")
        if not (self.f_max_n > 0 and math.isfinite(self.f_max_n)):
            raise ValueError(f"f_max_n must be > 0, got {self.f_max_n}")
        for name in ("f_base_hz", "delta_f_hz"):
            hz = getattr(self, name)
            if not (hz >= 0 and math.isfinite(hz)):
                raise ValueError(f"{name} must be >= 0, got {hz}")
        if not (self.cortical_shell_mm > 0 and math.isfinite(self.cortical_shell_mm)):
            raise ValueError(
                f"cortical_shell_mm must be > 0, got {self.cortical_shell_mm}")

    def as_doc(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def config_from_doc(doc: dict, base: DrillConfig | None = None) -> DrillConfig:
    """DrillConfig from a JSON document of field overrides."""
    base = base or DrillConfig()
    known = {f.name for f in fields(DrillConfig)}
    unknown = set(doc) - known
    if unknown:
        raise InvalidConfig(f"unknown drill config fields: {sorted(unknown)}")
    try:
        return replace(base, **doc)
    except (TypeError, ValueError) as exc:
        raise InvalidConfig(str(exc)) from None


@dataclass
class DrillState:
    """Mutable per-session state: engine clock, tip, remaining material."""

    sim_time_ms: int
    tip_mm: np.ndarray
    powered: bool
    remaining: np.ndarray
    material_total: int

    @classmethod
    def fresh(cls, plan: ZonePlan, home_pose_mm=(0.0, 0.0, 0.0)) -> "DrillState":
        """State at t=0 with all plannable (non-EMPTY) voxels intact."""
        remaining = plan.zones != int(Zone.EMPTY)
        return cls(
            sim_time_ms=0,
            tip_mm=np.asarray(home_pose_mm, dtype=np.float64).copy(),
            powered=False,
            remaining=remaining,
            material_total=int(remaining.sum()),
        )

    @property
    def removed_count(self) -> int:
        return self.material_total - int(self.remaining.sum())


@dataclass(frozen=True)
class TickOutput:
    """What one tick did: removals in order, plus the feedback channels."""

    removed: tuple[tuple[tuple[int, int, int], Zone], ...]
    force_n: float
    audio_hz: float
    warning: WarningLevel


def _candidates(state: DrillState, plan: ZonePlan, pose: np.ndarray, radius_mm: float):
    """Remaining voxels whose center is within the tip sphere.

    Returns index triples sorted by squared center distance, ties broken
    by x-fastest linear index so removal order never depends on memory
    layout or sort stability.
    """
    spec = plan.spec
    spacing = np.asarray(spec.spacing_mm)
    origin = np.asarray(spec.origin_mm)
    lo = np.floor((pose - radius_mm - origin) / spacing - 0.5).astype(np.int64)
    hi = np.ceil((pose + radius_mm - origin) / spacing - 0.5).astype(np.int64)
    lo = np.maximum(lo, 0)
    hi = np.minimum(hi, np.asarray(spec.dims) - 1)
    if np.any(lo > hi):
        return np.empty((0, 3), dtype=np.int64)
    box = tuple(slice(int(a), int(b) + 1) for a, b in zip(lo, hi))
    sub = state.remaining[box]
    if not sub.any():
        return np.empty((0, 3), dtype=np.int64)
    ii, jj, kk = np.nonzero(sub)
    ii = ii + lo[0]
    jj = jj + lo[1]
    kk = kk + lo[2]
    centers = (np.stack([ii, jj, kk], axis=1) + 0.5) * spacing + origin
    d2 = np.sum((centers - pose) ** 2, axis=1)
    inside = d2 <= radius_mm * radius_mm
    if not inside.any():
        return np.empty((0, 3), dtype=np.int64)
    ii, jj, kk, d2 = ii[inside], jj[inside], kk[inside], d2[inside]
    nx, ny, _ = spec.dims
    linear = ii + nx * (jj + ny * kk)
    order = np.lexsort((linear, d2))
    return np.stack([ii[order], jj[order], kk[order]], axis=1)


def tick(state: DrillState, pose_mm, powered: bool, cfg: DrillConfig,
         plan: ZonePlan, bone: DistanceField) -> TickOutput:
    """Advance one fixed timestep.

    Engine time moves by cfg.tick_ms no matter what, then the commanded
    pose is applied.  Unpowered ticks remove nothing and are silent.
    Powered ticks remove the nearest remaining in-sphere voxels up to the
    active cap; force is 0 when nothing was removed, else f_max scaled by
    rate_cortical over the active cap.

    Raises
    ------
    NonFinitePose
        Pose has a NaN or infinite component.
    SpecMismatch
        Plan and bone field live on different grids.
    """
    if bone.spec != plan.spec:
        raise SpecMismatch("bone field is not on the plan grid")
    pose = np.asarray(pose_mm, dtype=np.float64)
    if pose.shape != (3,) or not np.all(np.isfinite(pose)):
        raise NonFinitePose(f"bad pose {pose_mm!r}")

    state.sim_time_ms += cfg.tick_ms
    state.tip_mm = pose.copy()
    state.powered = bool(powered)
    if not powered:
        return TickOutput((), 0.0, 0.0, WarningLevel.NONE)

    s_bone = bone.sample(pose)
    in_shell = -cfg.cortical_shell_mm <= s_bone <= 0.0
    cap = cfg.rate_cortical if in_shell else cfg.rate_cancellous

    removed = []
    for i, j, k in _candidates(state, plan, pose, 0.5 * cfg.tip_diameter_mm)[:cap]:
        ijk = (int(i), int(j), int(k))
        state.remaining[ijk] = False
        removed.append((ijk, Zone(int(plan.zones[ijk]))))

    force = 0.0 if not removed else cfg.f_max_n * cfg.rate_cortical / cap
    if s_bone <= 0.0:
        ramp = min(max(1.0 - abs(s_bone) / cfg.cortical_shell_mm, 0.0), 1.0)
    else:
        ramp = 0.0
    audio = cfg.f_base_hz + cfg.delta_f_hz * ramp

    zones = {z for _, z in removed}
    if zones & {Zone.RED, Zone.ANATOMY}:
        warning = WarningLevel.RED
    elif Zone.YELLOW in zones:
        warning = WarningLevel.YELLOW
    else:
        warning = WarningLevel.NONE
    return TickOutput(tuple(removed), force, audio, warning)


# ----------------------------------------------------------------------------
# trajectories
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class PoseSample:
    """One commanded tool pose: advisory time, position, power switch."""

    t_ms: int
    pos_mm: tuple[float, float, float]
    on: bool


def save_trajectory(samples, path) -> None:
    lines = []
    for s in samples:
        doc = {"t_ms": s.t_ms, "pos_mm": list(s.pos_mm), "on": s.on}
        lines.append(canonical_json(doc) + "\n")
    Path(path).write_bytes("".join(lines).encode("utf-8"))


def load_trajectory(path) -> list[PoseSample]:
    samples = []
    for lineno, line in enumerate(Path(path).read_text("utf-8").splitlines(), start=1):
        if not line.strip():
            continue
        try:
            doc = json.loads(line)
            x, y, z = (float(v) for v in doc["pos_mm"])
            samples.append(PoseSample(int(doc["t_ms"]), (x, y, z), bool(doc["on"])))
        except (KeyError, TypeError, ValueError) as exc:
            raise MalformedRecord(f"{path}:{lineno}: {exc!r}") from None
    return samples


def run_trajectory(plan: ZonePlan, bone: DistanceField, cfg: DrillConfig,
                   samples, home_pose_mm=(0.0, 0.0, 0.0)) -> list[RemovalEvent]:
    """Replay a recorded pose stream offline and return its removal log.

    Sample timestamps must strictly increase and fall on whole ticks; they
    are validated but the log is stamped from the engine clock, one tick
    per sample, exactly as the live session service does.
    """
    last = None
    for s in samples:
        if s.t_ms < 0 or s.t_ms % cfg.tick_ms != 0:
            raise NonMonotoneTimestamps(
                f"t={s.t_ms} ms is not a whole number of {cfg.tick_ms} ms ticks")
        if last is not None and s.t_ms <= last:
            raise NonMonotoneTimestamps(f"t went from {last} to {s.t_ms} ms")
        last = s.t_ms

    state = DrillState.fresh(plan, home_pose_mm)
    log: list[RemovalEvent] = []
    for s in samples:
        out = tick(state, s.pos_mm, s.on, cfg, plan, bone)
        for ijk, zone in out.removed:
            log.append(RemovalEvent(state.sim_time_ms, ijk, zone))
    return log
