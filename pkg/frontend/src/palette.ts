/**
 * Display colors.  Zone voxels use the plan's anchor colors (pure red,
 * yellow, green); everything else material is plain bone.  With the
 * overlay off every material voxel renders as bone, which is exactly the
 * unguided condition's view.
 */

import { ZONE } from "./formats.js";

export type Rgb = readonly [number, number, number];

export const BACKGROUND: Rgb = [14, 16, 20];
export const BONE: Rgb = [198, 181, 155];
export const CURSOR: Rgb = [255, 255, 255];

const ZONE_RGB: Record<number, Rgb> = {
  [ZONE.GREEN]: [0, 255, 0],
  [ZONE.YELLOW]: [255, 255, 0],
  [ZONE.RED]: [255, 0, 0],
};

/** Color of a material voxel given its zone code, or of bare bone when null. */
export function voxelColor(zone: number | null): Rgb {
  if (zone === null) return BONE;
  return ZONE_RGB[zone] ?? BONE;
}
