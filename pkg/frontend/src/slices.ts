/**
 * Pure rasterizers: session state in, RGBA pixel buffers out.
 *
 * Keeping these free of canvas and DOM lets the tests assert on exact
 * pixels.  The UI layer blits the buffers with putImageData and draws the
 * cursor crosshair on top.
 */

import { GridSpec, Vec3, linearIndex } from "./grid.js";
import { BACKGROUND, Rgb, voxelColor } from "./palette.js";
import { SessionView } from "./state.js";

export interface Raster {
  width: number;
  height: number;
  rgba: Uint8ClampedArray<ArrayBuffer>;
}

/** The two in-plane axes (u, v) for a slice with the given normal. */
export function planeAxes(normal: number): [number, number] {
  const axes = [0, 1, 2].filter(a => a !== normal);
  return [axes[0], axes[1]];
}

function put(raster: Raster, px: number, py: number, c: Rgb): void {
  const o = 4 * (py * raster.width + px);
  raster.rgba[o] = c[0];
  raster.rgba[o + 1] = c[1];
  raster.rgba[o + 2] = c[2];
  raster.rgba[o + 3] = 255;
}

/**
 * One voxel per pixel slice through the volume.  `normal` is the axis the
 * slice cuts (0 sagittal, 1 coronal, 2 axial) and `index` the voxel layer.
 */
export function renderSlice(view: SessionView, normal: number, index: number): Raster {
  const spec = view.spec;
  const [u, v] = planeAxes(normal);
  const raster: Raster = {
    width: spec.dims[u],
    height: spec.dims[v],
    rgba: new Uint8ClampedArray(4 * spec.dims[u] * spec.dims[v]),
  };
  const ijk: Vec3 = [0, 0, 0];
  ijk[normal] = index;
  for (let pv = 0; pv < raster.height; pv++) {
    ijk[v] = pv;
    for (let pu = 0; pu < raster.width; pu++) {
      ijk[u] = pu;
      const li = linearIndex(spec, ijk[0], ijk[1], ijk[2]);
      if (!view.material[li]) {
        put(raster, pu, pv, BACKGROUND);
      } else {
        put(raster, pu, pv, voxelColor(view.zones === null ? null : view.zones[li]));
      }
    }
  }
  return raster;
}

/**
 * Simple rotating point cloud of the remaining material, orthographic.
 * Yaw spins about the grid z axis, pitch tilts toward the viewer.  Points
 * are depth-sorted back to front so near voxels win overdraw.
 */
export function renderPoints(
  view: SessionView, size: number, yawRad: number, pitchRad: number,
): Raster {
  const spec = view.spec;
  const raster: Raster = {
    width: size,
    height: size,
    rgba: new Uint8ClampedArray(4 * size * size),
  };
  for (let p = 3; p < raster.rgba.length; p += 4) raster.rgba[p] = 255;
  for (let px = 0; px < size * size; px++) {
    put(raster, px % size, Math.floor(px / size), BACKGROUND);
  }

  const half = spec.dims.map((n, a) => 0.5 * n * spec.spacingMm[a]);
  const radius = Math.hypot(half[0], half[1], half[2]);
  const scale = (0.5 * size - 2) / radius;
  const cy = Math.cos(yawRad), sy = Math.sin(yawRad);
  const cp = Math.cos(pitchRad), sp = Math.sin(pitchRad);

  const order: { depth: number; px: number; py: number; li: number }[] = [];
  const [nx, ny, nz] = spec.dims;
  for (let k = 0; k < nz; k++) {
    for (let j = 0; j < ny; j++) {
      for (let i = 0; i < nx; i++) {
        const li = linearIndex(spec, i, j, k);
        if (!view.material[li]) continue;
        const wx = (i + 0.5) * spec.spacingMm[0] - half[0];
        const wy = (j + 0.5) * spec.spacingMm[1] - half[1];
        const wz = (k + 0.5) * spec.spacingMm[2] - half[2];
        const rx = cy * wx + sy * wy;
        const ry = -sy * wx + cy * wy;
        const sy2 = cp * wz - sp * ry;
        const depth = sp * wz + cp * ry;
        const px = Math.round(size / 2 + scale * rx);
        const py = Math.round(size / 2 - scale * sy2);
        if (px < 0 || py < 0 || px >= size || py >= size) continue;
        order.push({ depth, px, py, li });
      }
    }
  }
  order.sort((a, b) => a.depth - b.depth || a.li - b.li);
  for (const pt of order) {
    const c = voxelColor(view.zones === null ? null : view.zones[pt.li]);
    put(raster, pt.px, pt.py, c);
  }
  return raster;
}

/** RGBA bytes at one pixel, handy in tests. */
export function pixelAt(raster: Raster, px: number, py: number): [number, number, number, number] {
  const o = 4 * (py * raster.width + px);
  return [raster.rgba[o], raster.rgba[o + 1], raster.rgba[o + 2], raster.rgba[o + 3]];
}
