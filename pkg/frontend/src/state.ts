/**
 * Client-side session state.
 *
 * The server is the single source of truth: zones come from the fetched
 * plan, and force, audio, warnings, and removals come from socket frames.
 * Nothing here computes a zone.  The one rule with teeth is the guidance
 * overlay: turning it off must leave no per-voxel zone data behind, so the
 * zones buffer is dropped entirely rather than hidden by a flag.
 */

import { GridSpec, Vec3, linearIndex, nVoxels } from "./grid.js";
import { ZoneName } from "./formats.js";

export type WarningLevel = "NONE" | "YELLOW" | "RED";

export interface ServerFrame {
  t: number;
  /** [i, j, k] or [i, j, k, zoneName] per removed voxel. */
  removed: (readonly [number, number, number] | readonly [number, number, number, ZoneName])[];
  forceN: number;
  audioHz: number;
  warning: WarningLevel;
}

export interface ProtocolError {
  error: string;
  detail: string;
}

/** Parse one inbound socket message into a frame or a server-side error. */
export function parseServerMessage(text: string): ServerFrame | ProtocolError {
  let doc: any;
  try {
    doc = JSON.parse(text);
  } catch (e) {
    return { error: "MalformedMessage", detail: `unparseable server frame: ${e}` };
  }
  if (typeof doc !== "object" || doc === null) {
    return { error: "MalformedMessage", detail: "server frame is not an object" };
  }
  if (typeof doc.error === "string") {
    return { error: doc.error, detail: String(doc.detail ?? "") };
  }
  const ok =
    typeof doc.t === "number" &&
    Array.isArray(doc.removed) &&
    typeof doc.force_n === "number" &&
    typeof doc.audio_hz === "number" &&
    (doc.warning === "NONE" || doc.warning === "YELLOW" || doc.warning === "RED") &&
    doc.removed.every(
      (r: any) => Array.isArray(r) && r.length >= 3 && r.slice(0, 3).every(Number.isInteger));
  if (!ok) {
    return { error: "MalformedMessage", detail: `frame missing fields: ${text.slice(0, 200)}` };
  }
  return {
    t: doc.t,
    removed: doc.removed,
    forceN: doc.force_n,
    audioHz: doc.audio_hz,
    warning: doc.warning,
  };
}

export class SessionView {
  readonly caseId: string;
  readonly spec: GridSpec;
  /** Session-level grant; when false the server tags no zones and the overlay stays off. */
  readonly guidanceGranted: boolean;

  /** 1 while the voxel still holds material; removals clear it. */
  material: Uint8Array;
  /** Zone code per voxel while the overlay is on, else null.  Never read for logic. */
  zones: Uint8Array | null;

  cursorMm: Vec3;
  powered = false;
  /** Displayed slice index along each axis. */
  slice: Vec3;

  simTimeMs = 0;
  forceN = 0;
  audioHz = 0;
  warning: WarningLevel = "NONE";
  removedCount = 0;

  constructor(opts: {
    caseId: string;
    labels: Uint8Array;
    spec: GridSpec;
    guidanceGranted: boolean;
    zones: Uint8Array | null;
    homePoseMm: Vec3;
  }) {
    if (opts.zones !== null && !opts.guidanceGranted) {
      throw new Error("zones supplied for a session without guidance");
    }
    if (opts.labels.length !== nVoxels(opts.spec)) {
      throw new Error(`labels length ${opts.labels.length} does not match dims`);
    }
    this.caseId = opts.caseId;
    this.spec = opts.spec;
    this.guidanceGranted = opts.guidanceGranted;
    this.material = Uint8Array.from(opts.labels, v => (v !== 0 ? 1 : 0));
    this.zones = opts.zones;
    this.cursorMm = [...opts.homePoseMm];
    this.slice = opts.spec.dims.map(n => n >> 1) as Vec3;
  }

  /** Apply one server frame; removals take effect before the next render. */
  applyFrame(frame: ServerFrame): void {
    for (const r of frame.removed) {
      const idx = linearIndex(this.spec, r[0], r[1], r[2]);
      if (idx >= 0 && idx < this.material.length && this.material[idx]) {
        this.material[idx] = 0;
        this.removedCount += 1;
      }
    }
    this.simTimeMs = frame.t;
    this.forceN = frame.forceN;
    this.audioHz = frame.audioHz;
    this.warning = frame.warning;
  }

  /**
   * Turn the zone overlay off or back on.  Off discards the zone buffer;
   * re-enabling needs the plan bytes fetched again by the caller.
   */
  setOverlay(zones: Uint8Array | null): void {
    if (zones !== null) {
      if (!this.guidanceGranted) throw new Error("session was created without guidance");
      if (zones.length !== nVoxels(this.spec)) {
        throw new Error(`zones length ${zones.length} does not match dims`);
      }
    }
    this.zones = zones;
  }

  get overlayOn(): boolean {
    return this.zones !== null;
  }
}
