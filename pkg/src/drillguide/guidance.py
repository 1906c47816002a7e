"""Zone planning: turn distance fields into per-voxel drilling guidance.

Target voxels are classified against protected structures by signed
distance.  Within `red_mm` of a protected structure a voxel is RED,
within a further `yellow_mm` it is YELLOW, otherwise GREEN.  When several
structures are protected, the most restrictive classification wins.
Labeled voxels outside the target are ANATOMY, unlabeled voxels EMPTY.
"""

from dataclasses import dataclass, field
from enum import IntEnum

import numpy as np

from .errors import DimensionMismatch, EmptyTarget, MalformedHeader, SpecMismatch
from .fileio import read_blob, write_blob
from .volume import EMPTY as EMPTY_CODE
from .volume import GridSpec, LabelVolume, _spec_from_header

__all__ = [
    "Zone",
    "ShellParams",
    "ColorStops",
    "ZonePlan",
    "build_plan",
    "plan_counts",
    "blend_color",
    "save_plan",
    "load_plan",
    "PLAN_VERSION",
]

PLAN_VERSION = "CAPP1"


class Zone(IntEnum):
    """Per-voxel guidance classes, stored as one byte each."""

    EMPTY = 0
    ANATOMY = 1
    GREEN = 2
    YELLOW = 3
    RED = 4


@dataclass(frozen=True)
class ShellParams:
    """Shell thicknesses used to build a plan.

    red_thickness_mm maps protected structure name to its red shell in mm.
    A thin red shell (0.1 mm) effectively turns a structure into a hard
    wall, a thick one (1.0 mm) keeps the tool at standoff.  The yellow
    shell extends `yellow_mm` beyond each red shell.  `cortical_shell_mm`
    is not used for zoning; it is carried along because plan consumers
    (engine, session service) need the same value the plan was built with.
    """

    red_thickness_mm: dict[str, float] = field(default_factory=dict)
    yellow_mm: float = 1.0
    cortical_shell_mm: float = 1.5

    def __post_init__(self):
        for name, mm in self.red_thickness_mm.items():
            if not np.isfinite(mm) or mm < 0:
                raise ValueError(f"red shell for {name!r} must be >= 0, got {mm}")
        if not np.isfinite(self.yellow_mm) or self.yellow_mm < 0:
            raise ValueError(f"yellow_mm must be >= 0, got {self.yellow_mm}")
        if not np.isfinite(self.cortical_shell_mm) or self.cortical_shell_mm <= 0:
            raise ValueError(
                f"cortical_shell_mm must be > 0, got {self.cortical_shell_mm}")


@dataclass(frozen=True, eq=False)
class ZonePlan:
    """Zone byte per voxel plus the parameters and counts behind it."""

    spec: GridSpec
    zones: np.ndarray
    params: ShellParams
    planned_counts: dict[Zone, int] = field(default_factory=dict)

    def __post_init__(self):
        zones = np.asarray(self.zones, dtype=np.uint8)
        if zones.shape != self.spec.dims:
            raise ValueError(
                f"zones shape {zones.shape} does not match grid dims {self.spec.dims}")
        if int(zones.max()) > int(Zone.RED):
            raise ValueError("zones contains bytes outside the Zone enum")
        counts = _histogram(zones)
        if self.planned_counts and dict(self.planned_counts) != counts:
            raise ValueError("planned_counts do not match the zones array")
        object.__setattr__(self, "zones", zones)
        object.__setattr__(self, "planned_counts", counts)


def _histogram(zones: np.ndarray) -> dict[Zone, int]:
    binc = np.bincount(zones.ravel(), minlength=len(Zone))
    return {z: int(binc[z]) for z in Zone if z is not Zone.EMPTY}


def plan_counts(plan: ZonePlan) -> dict[Zone, int]:
    """Planned voxel count per zone, EMPTY excluded."""
    return _histogram(plan.zones)


def build_plan(volume: LabelVolume, target_codes, protect, yellow_mm: float = 1.0,
               cortical_shell_mm: float = 1.5) -> ZonePlan:
    """Classify every voxel of `volume` into a zone.

    Parameters
    ----------
    volume : LabelVolume
    target_codes : iterable of int
        Label codes of the segment that is planned for removal.
    protect : sequence of (DistanceField, red_mm)
        Signed field of each protected structure with its red shell
        thickness in mm.  Fields must share the volume's grid.
    yellow_mm : float
        Extra thickness of the yellow shell beyond each red shell.
    cortical_shell_mm : float
        Recorded in the plan parameters for downstream consumers.

    Returns
    -------
    ZonePlan
        RED where any protected field is within its red shell, YELLOW
        within red + yellow, GREEN elsewhere in the target; non-target
        labeled voxels are ANATOMY and the rest EMPTY.
    """
    target_codes = sorted(set(int(c) for c in target_codes))
    target = np.isin(volume.labels, np.asarray(target_codes, dtype=np.uint8))
    if not target.any():
        raise EmptyTarget(f"no voxel carries target codes {target_codes}")

    red = np.zeros(volume.spec.dims, dtype=bool)
    yellow = np.zeros(volume.spec.dims, dtype=bool)
    red_mm_by_name: dict[str, float] = {}
    for fld, red_mm in protect:
        if fld.spec != volume.spec:
            raise SpecMismatch(
                f"field {fld.structure_name!r} is not on the volume grid")
        red_mm = float(red_mm)
        if not np.isfinite(red_mm) or red_mm < 0:
            raise ValueError(f"red shell must be >= 0, got {red_mm}")
        red |= fld.values <= red_mm
        yellow |= fld.values <= red_mm + yellow_mm
        red_mm_by_name[fld.structure_name] = red_mm

    zones = np.zeros(volume.spec.dims, dtype=np.uint8)
    zones[volume.labels != EMPTY_CODE] = Zone.ANATOMY
    zones[target] = Zone.GREEN
    zones[target & yellow] = Zone.YELLOW
    zones[target & red] = Zone.RED

    params = ShellParams(red_mm_by_name, float(yellow_mm), float(cortical_shell_mm))
    return ZonePlan(volume.spec, zones, params)


# ----------------------------------------------------------------------------
# display colors
# ----------------------------------------------------------------------------

@dataclass(frozen=True)
class ColorStops:
    """Anchor colors and distances for continuous proximity coloring.

    Full red at or below `t_red_mm`, pure yellow at `t_yellow_mm`, fading
    to green over one more yellow-width beyond that.
    """

    red: tuple[float, float, float] = (1.0, 0.0, 0.0)
    yellow: tuple[float, float, float] = (1.0, 1.0, 0.0)
    green: tuple[float, float, float] = (0.0, 1.0, 0.0)
    t_red_mm: float = 1.0
    t_yellow_mm: float = 2.0

    def __post_init__(self):
        if not self.t_red_mm < self.t_yellow_mm:
            raise ValueError(
                f"need t_red_mm < t_yellow_mm, got {self.t_red_mm}, {self.t_yellow_mm}")


def _lerp(a, b, u: float) -> tuple[float, float, float]:
    return tuple(ai + (bi - ai) * u for ai, bi in zip(a, b))


def blend_color(d_mm: float, stops: ColorStops = ColorStops()) -> tuple[float, float, float]:
    """Continuous RGB in [0, 1] for a distance `d_mm` to protected anatomy.

    Piecewise linear: red up to t_red_mm, red to yellow until t_yellow_mm,
    yellow to green over the same width again, then constant green.
    """
    t0, t1 = stops.t_red_mm, stops.t_yellow_mm
    t2 = t1 + (t1 - t0)
    if d_mm <= t0:
        return tuple(stops.red)
    if d_mm < t1:
        return _lerp(stops.red, stops.yellow, (d_mm - t0) / (t1 - t0))
    if d_mm < t2:
        return _lerp(stops.yellow, stops.green, (d_mm - t1) / (t2 - t1))
    return tuple(stops.green)


# ----------------------------------------------------------------------------
# file format
# ----------------------------------------------------------------------------

def save_plan(plan: ZonePlan, path) -> None:
    """Write a plan as header line + one zone byte per voxel, x-fastest."""
    spec = plan.spec
    p = plan.params
    header = {
        "version": PLAN_VERSION,
        "dims": list(spec.dims),
        "spacing_mm": list(spec.spacing_mm),
        "origin_mm": list(spec.origin_mm),
        "params": {
            "red_thickness_mm": {n: p.red_thickness_mm[n] for n in sorted(p.red_thickness_mm)},
            "yellow_mm": p.yellow_mm,
            "cortical_shell_mm": p.cortical_shell_mm,
        },
        "counts": {z.name: plan.planned_counts[z] for z in Zone if z is not Zone.EMPTY},
    }
    write_blob(path, header, plan.zones.ravel(order="F").tobytes())


def load_plan(path) -> ZonePlan:
    """Read a plan file; counts in the header must match the payload."""
    header, payload = read_blob(path, PLAN_VERSION)
    spec = _spec_from_header(path, header)
    if len(payload) != spec.n_voxels:
        raise DimensionMismatch(
            f"{path}: payload is {len(payload)} bytes, dims need {spec.n_voxels}")
    zones = np.frombuffer(payload, dtype=np.uint8).reshape(spec.dims, order="F").copy()
    try:
        raw = header["params"]
        params = ShellParams(
            {str(n): float(mm) for n, mm in raw["red_thickness_mm"].items()},
            float(raw["yellow_mm"]),
            float(raw["cortical_shell_mm"]),
        )
        declared = {str(n): int(c) for n, c in header["counts"].items()}
    except (KeyError, TypeError, ValueError) as exc:
        raise MalformedHeader(f"{path}: {exc!r}") from None
    plan = ZonePlan(spec, zones, params)
    actual = {z.name: plan.planned_counts[z] for z in Zone if z is not Zone.EMPTY}
    if declared != actual:
        raise MalformedHeader(f"{path}: header counts {declared} != payload {actual}")
    return plan
