/**
 * Voxel grid geometry, mirroring the engine's conventions exactly.
 *
 * The origin is the corner of voxel (0,0,0); the center of voxel i sits at
 * origin + (i + 0.5) * spacing.  Serialization order is x-fastest, so the
 * linear index of (i,j,k) is i + nx*(j + ny*k).  The cursor pose the client
 * streams must go through these same formulas or the server's removal
 * pattern will not line up with what is drawn.
 */

export type Vec3 = [number, number, number];

export interface GridSpec {
  dims: Vec3;
  spacingMm: Vec3;
  originMm: Vec3;
}

export function nVoxels(spec: GridSpec): number {
  const [nx, ny, nz] = spec.dims;
  return nx * ny * nz;
}

export function linearIndex(spec: GridSpec, i: number, j: number, k: number): number {
  const [nx, ny] = spec.dims;
  return i + nx * (j + ny * k);
}

/** World coordinates (mm) of the center of voxel ijk. */
export function indexToWorld(spec: GridSpec, ijk: Vec3): Vec3 {
  return [0, 1, 2].map(
    a => spec.originMm[a] + (ijk[a] + 0.5) * spec.spacingMm[a]) as Vec3;
}

/** Voxel whose cell contains the world point; may lie outside the grid. */
export function worldToIndex(spec: GridSpec, pointMm: Vec3): Vec3 {
  return [0, 1, 2].map(
    a => Math.floor((pointMm[a] - spec.originMm[a]) / spec.spacingMm[a])) as Vec3;
}

export function containsIndex(spec: GridSpec, ijk: Vec3): boolean {
  return ijk.every((v, a) => v >= 0 && v < spec.dims[a]);
}

/**
 * Continuous pixel-to-world mapping for a slice view: fraction f in [0,1)
 * along an axis lands at origin + f * extent.  Used for the mouse cursor,
 * which moves in mm rather than snapping to voxel centers.
 */
export function worldFromFraction(spec: GridSpec, axis: number, f: number): number {
  return spec.originMm[axis] + f * spec.dims[axis] * spec.spacingMm[axis];
}

export function fractionFromWorld(spec: GridSpec, axis: number, mm: number): number {
  return (mm - spec.originMm[axis]) / (spec.dims[axis] * spec.spacingMm[axis]);
}
