"""Synthetic slab case with hand-countable geometry.

The slab stacks, bottom to top along z: deep bone, a protected canal,
the drillable target segment, then air.  A one-voxel protected wall
plate covers the x=0 face of the stack.  Every zone boundary lands on a
whole voxel layer, so expected zone counts can be derived on paper:
with 0.48 mm spacing and a 1.0 mm red / 1.0 mm yellow canal shell the
two target layers above the canal are RED, the next two YELLOW, and a
0.1 mm red / 1.0 mm yellow wall shell turns the two target columns next
to the wall YELLOW.
"""

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .distance import DistanceField, signed_edt, save_field
from .engine import DrillConfig
from .fileio import canonical_json
from .guidance import ZonePlan, build_plan, save_plan
from .volume import GridSpec, LabelVolume, save_volume

__all__ = ["SlabCase", "make_slab_case", "write_case_dir"]

CANAL, SEGMENT, BONE, WALL = 1, 2, 3, 4

PALETTE = {0: "EMPTY", CANAL: "canal", SEGMENT: "segment", BONE: "bone", WALL: "wall"}

BONE_CODES = (SEGMENT, BONE, WALL)  # the canal is a space, not bone


@dataclass(frozen=True)
class SlabCase:
    """A volume with its fields and plan, ready for simulation."""

    volume: LabelVolume
    canal_field: DistanceField
    wall_field: DistanceField
    bone_field: DistanceField
    plan: ZonePlan
    cfg: DrillConfig
    home_pose_mm: tuple[float, float, float]

    @property
    def center_xy_mm(self) -> tuple[float, float]:
        return self.home_pose_mm[0], self.home_pose_mm[1]


def make_slab_case(dims=(16, 16, 28), spacing_mm=0.48,
                   red_canal_mm=1.0, red_wall_mm=0.1, yellow_mm=1.0,
                   cfg: DrillConfig = DrillConfig()) -> SlabCase:
    """Build the slab case on an isotropic grid.

    Layers along z (defaults): bone 0..5, canal 6..9, target 10..19, air
    above.  The wall plate sits at x=0 for z 0..19.  The home pose hangs
    in the air over the stack center.
    """
    nx, ny, nz = dims
    if nx < 6 or ny < 4 or nz < 24:
        raise ValueError(f"slab needs dims >= (6, 4, 24), got {dims}")
    spec = GridSpec(dims, (spacing_mm,) * 3)
    labels = np.zeros(dims, dtype=np.uint8)
    labels[1:, :, 0:6] = BONE
    labels[1:, :, 6:10] = CANAL
    labels[1:, :, 10:20] = SEGMENT
    labels[0, :, 0:20] = WALL
    volume = LabelVolume(spec, labels, PALETTE)

    canal_field = signed_edt(volume, [CANAL])
    wall_field = signed_edt(volume, [WALL])
    bone_field = signed_edt(volume, BONE_CODES, structure_name="bone-mass")
    plan = build_plan(
        volume, [SEGMENT],
        [(canal_field, red_canal_mm), (wall_field, red_wall_mm)],
        yellow_mm=yellow_mm, cortical_shell_mm=cfg.cortical_shell_mm)

    cx = nx // 2
    cy = ny // 2
    home = tuple(float(c) for c in spec.index_to_world((cx, cy, nz - 2)))
    return SlabCase(volume, canal_field, wall_field, bone_field, plan, cfg, home)


def write_case_dir(case: SlabCase, dirpath) -> Path:
    """Write the case in the layout the session service serves from."""
    d = Path(dirpath)
    d.mkdir(parents=True, exist_ok=True)
    save_volume(case.volume, d / "volume.capv")
    save_plan(case.plan, d / "plan.capp")
    save_field(case.bone_field, d / "bone.capf")
    doc = {"home_pose_mm": list(case.home_pose_mm), "drill": case.cfg.as_doc()}
    (d / "case.json").write_text(canonical_json(doc) + "\n", "utf-8")
    return d
