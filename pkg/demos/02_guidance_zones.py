"""
Guidance zones around protected structures
==========================================

The slab phantom has a resection target sitting between a canal below and
a thin wall on one side.  The planner grades every target voxel by how
close drilling there would come to something protected.
"""

from drillguide import Zone, blend_color, make_slab_case

case = make_slab_case()
plan = case.plan
print("slab phantom:", case.volume.spec.dims, "voxels at",
      case.volume.spec.spacing_mm[0], "mm")
print("protected:", ", ".join(plan.params.red_thickness_mm))
print("planned:", {z.name: n for z, n in plan.planned_counts.items()})

# 1. a cut through the middle of the slab, drawn one character per voxel.
#    The canal runs under the target; the wall is the left column.
GLYPH = {Zone.EMPTY: ".", Zone.ANATOMY: "#", Zone.GREEN: "g",
         Zone.YELLOW: "y", Zone.RED: "R"}
j = plan.spec.dims[1] // 2
print(f"\nslice y = {j} (x across, z down; # anatomy, g/y/R zones, . air):")
for k in reversed(range(plan.spec.dims[2])):
    row = "".join(GLYPH[Zone(int(plan.zones[i, j, k]))]
                  for i in range(plan.spec.dims[0]))
    print(f"  z={k:2d}  {row}")

# 2. RED hugs the canal within 1.0 mm, YELLOW adds a 1.0 mm buffer, and
#    the 0.1 mm wall shell shows up as yellow columns near x = 0
red = plan.planned_counts[Zone.RED]
yellow = plan.planned_counts[Zone.YELLOW]
green = plan.planned_counts[Zone.GREEN]
total = red + yellow + green
print(f"\ntarget split: {green}/{total} green, {yellow}/{total} yellow, "
      f"{red}/{total} red")

# 3. displays shade voxels continuously by the same distances
print("\ncolor ramp by distance to the nearest protected structure:")
for d in (0.0, 0.5, 1.0, 1.25, 1.5, 1.75, 2.0, 2.5, 3.0, 4.0):
    r, g, b = blend_color(d)
    bar = "*" * int(round(10 * r)) + "-" * int(round(10 * g))
    print(f"  {d:4.2f} mm  rgb=({r:4.2f}, {g:4.2f}, {b:4.2f})  {bar}")
