/**
 * Decoders for the two artifacts the client fetches from the service.
 *
 * Both files are one line of canonical JSON (UTF-8, terminated by \n)
 * followed by one uint8 per voxel in x-fastest order.  "CAPV1" carries
 * label codes plus a palette naming them; "CAPP1" carries zone codes plus
 * the shell parameters and per-zone counts the plan was built with.  The
 * client never derives zones itself; everything it colors comes out of
 * these payloads or the live socket frames.
 */

import { GridSpec, Vec3, nVoxels } from "./grid.js";

/** Anything wrong with fetched bytes; the UI turns this into an error banner. */
export class DecodeError extends Error {}

export const ZONE_NAMES = ["EMPTY", "ANATOMY", "GREEN", "YELLOW", "RED"] as const;
export type ZoneName = (typeof ZONE_NAMES)[number];

export const ZONE = { EMPTY: 0, ANATOMY: 1, GREEN: 2, YELLOW: 3, RED: 4 } as const;

export interface VolumeData {
  spec: GridSpec;
  /** Label code per voxel, x-fastest. */
  labels: Uint8Array;
  palette: Map<number, string>;
}

export interface PlanData {
  spec: GridSpec;
  /** Zone code per voxel, x-fastest; see ZONE. */
  zones: Uint8Array;
  counts: Partial<Record<ZoneName, number>>;
  params: { redThicknessMm: Record<string, number>; yellowMm: number; corticalShellMm: number };
}

function splitHeader(buf: Uint8Array, what: string): { header: any; payload: Uint8Array } {
  const nl = buf.indexOf(0x0a);
  if (nl < 0) throw new DecodeError(`${what}: no header line`);
  let header: unknown;
  try {
    header = JSON.parse(new TextDecoder("utf-8", { fatal: true }).decode(buf.subarray(0, nl)));
  } catch (e) {
    throw new DecodeError(`${what}: bad header: ${e}`);
  }
  if (typeof header !== "object" || header === null || Array.isArray(header)) {
    throw new DecodeError(`${what}: header is not a JSON object`);
  }
  return { header, payload: buf.subarray(nl + 1) };
}

function vec3(raw: unknown, what: string, field: string): Vec3 {
  if (!Array.isArray(raw) || raw.length !== 3 || raw.some(v => typeof v !== "number" || !Number.isFinite(v))) {
    throw new DecodeError(`${what}: ${field} must be three finite numbers, got ${JSON.stringify(raw)}`);
  }
  return [raw[0], raw[1], raw[2]];
}

function specFromHeader(header: any, what: string): GridSpec {
  const dims = vec3(header.dims, what, "dims");
  if (dims.some(n => !Number.isInteger(n) || n < 1)) {
    throw new DecodeError(`${what}: dims must be positive integers, got ${JSON.stringify(dims)}`);
  }
  const spacing = vec3(header.spacing_mm, what, "spacing_mm");
  if (spacing.some(s => s <= 0)) {
    throw new DecodeError(`${what}: spacing_mm must be positive, got ${JSON.stringify(spacing)}`);
  }
  return { dims, spacingMm: spacing, originMm: vec3(header.origin_mm, what, "origin_mm") };
}

function payloadForSpec(payload: Uint8Array, spec: GridSpec, what: string): Uint8Array {
  const n = nVoxels(spec);
  if (payload.length !== n) {
    throw new DecodeError(`${what}: payload is ${payload.length} bytes, dims need ${n}`);
  }
  // Copy so the result never aliases the (possibly pooled) fetch buffer.
  return payload.slice();
}

export function decodeVolume(bytes: Uint8Array): VolumeData {
  const { header, payload } = splitHeader(bytes, "volume");
  if (header.version !== "CAPV1") {
    throw new DecodeError(`volume: got version ${JSON.stringify(header.version)}, expected "CAPV1"`);
  }
  const spec = specFromHeader(header, "volume");
  const palette = new Map<number, string>();
  for (const [code, name] of Object.entries(header.palette ?? {})) {
    const c = Number(code);
    if (!Number.isInteger(c) || c < 0 || c > 255 || typeof name !== "string") {
      throw new DecodeError(`volume: bad palette entry ${code}: ${JSON.stringify(name)}`);
    }
    palette.set(c, name);
  }
  return { spec, labels: payloadForSpec(payload, spec, "volume"), palette };
}

export function decodePlan(bytes: Uint8Array): PlanData {
  const { header, payload } = splitHeader(bytes, "plan");
  if (header.version !== "CAPP1") {
    throw new DecodeError(`plan: got version ${JSON.stringify(header.version)}, expected "CAPP1"`);
  }
  const spec = specFromHeader(header, "plan");
  const zones = payloadForSpec(payload, spec, "plan");

  const raw = header.params;
  if (typeof raw !== "object" || raw === null) throw new DecodeError("plan: missing params");
  const red: Record<string, number> = {};
  for (const [name, mm] of Object.entries(raw.red_thickness_mm ?? {})) {
    if (typeof mm !== "number" || !(mm > 0)) {
      throw new DecodeError(`plan: red_thickness_mm[${name}] must be > 0, got ${JSON.stringify(mm)}`);
    }
    red[name] = mm;
  }
  const params = {
    redThicknessMm: red,
    yellowMm: Number(raw.yellow_mm),
    corticalShellMm: Number(raw.cortical_shell_mm),
  };
  if (!Number.isFinite(params.yellowMm) || !Number.isFinite(params.corticalShellMm)) {
    throw new DecodeError("plan: yellow_mm and cortical_shell_mm must be numbers");
  }

  // The header's counts are a checksum over the payload: recompute and
  // compare so a truncated or reordered payload cannot slip through.
  const hist = new Array<number>(ZONE_NAMES.length).fill(0);
  for (const z of zones) {
    if (z >= ZONE_NAMES.length) throw new DecodeError(`plan: unknown zone code ${z}`);
    hist[z] += 1;
  }
  const counts: Partial<Record<ZoneName, number>> = {};
  for (const [name, count] of Object.entries(header.counts ?? {})) {
    const idx = ZONE_NAMES.indexOf(name as ZoneName);
    if (idx < 0 || typeof count !== "number") {
      throw new DecodeError(`plan: bad counts entry ${name}: ${JSON.stringify(count)}`);
    }
    if (hist[idx] !== count) {
      throw new DecodeError(`plan: header says ${count} ${name}, payload has ${hist[idx]}`);
    }
    counts[name as ZoneName] = count;
  }
  for (let z = 1; z < ZONE_NAMES.length; z++) {
    if (hist[z] > 0 && counts[ZONE_NAMES[z]] === undefined) {
      throw new DecodeError(`plan: payload has ${ZONE_NAMES[z]} voxels but header counts omit it`);
    }
  }
  return { spec, zones, counts, params };
}
