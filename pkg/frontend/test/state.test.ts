/**
 * Frame parsing and session state.  The frame strings here are verbatim
 * outputs of the service's canonical JSON encoder, so the parser is tested
 * against what the wire actually carries.
 */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { decodePlan, decodeVolume } from "../src/formats.js";
import { SessionView, parseServerMessage } from "../src/state.js";

function fixture(name: string): Uint8Array {
  return new Uint8Array(readFileSync(new URL(`./fixtures/${name}`, import.meta.url)));
}

function tinyView(guidance = true): SessionView {
  const vol = decodeVolume(fixture("tiny.capv"));
  const plan = decodePlan(fixture("tiny.capp"));
  return new SessionView({
    caseId: "tiny",
    labels: vol.labels,
    spec: vol.spec,
    guidanceGranted: guidance,
    zones: guidance ? plan.zones : null,
    homePoseMm: [1.5, -1.0, 3.0],
  });
}

describe("parseServerMessage", () => {
  it("parses a guided removal frame", () => {
    const msg = parseServerMessage(
      '{"t":5,"removed":[[8,8,17,"GREEN"]],"force_n":3.2,"audio_hz":299.2,"warning":"NONE"}');
    expect(msg).toEqual({
      t: 5, removed: [[8, 8, 17, "GREEN"]], forceN: 3.2, audioHz: 299.2, warning: "NONE",
    });
  });

  it("parses an unguided removal frame without zone tags", () => {
    const msg = parseServerMessage(
      '{"t":5,"removed":[[8,8,17]],"force_n":3.2,"audio_hz":299.2,"warning":"NONE"}');
    expect(msg).toEqual({
      t: 5, removed: [[8, 8, 17]], forceN: 3.2, audioHz: 299.2, warning: "NONE",
    });
  });

  it("passes server error frames through", () => {
    const msg = parseServerMessage('{"error":"MalformedMessage","detail":"pos_mm must be finite"}');
    expect(msg).toEqual({ error: "MalformedMessage", detail: "pos_mm must be finite" });
  });

  it("flags unparseable and incomplete frames", () => {
    expect(parseServerMessage("}{")).toHaveProperty("error", "MalformedMessage");
    expect(parseServerMessage("null")).toHaveProperty("error", "MalformedMessage");
    expect(parseServerMessage('{"t":5}')).toHaveProperty("error", "MalformedMessage");
    expect(parseServerMessage(
      '{"t":5,"removed":[],"force_n":0,"audio_hz":0,"warning":"PURPLE"}'),
    ).toHaveProperty("error", "MalformedMessage");
    expect(parseServerMessage(
      '{"t":5,"removed":[[1.5,0,0]],"force_n":0,"audio_hz":0,"warning":"NONE"}'),
    ).toHaveProperty("error", "MalformedMessage");
  });
});

describe("SessionView", () => {
  it("derives the material mask from nonzero labels", () => {
    const view = tinyView();
    expect(Array.from(view.material)).toEqual([1, 0, 1, 0, 1, 0, 1, 1, 0, 0, 0, 1]);
    expect(view.removedCount).toBe(0);
  });

  it("applies removals and scalar feedback from a frame", () => {
    const view = tinyView();
    view.applyFrame({
      t: 10, removed: [[2, 0, 0, "RED"], [0, 0, 0, "GREEN"]],
      forceN: 0.32, audioHz: 440, warning: "RED",
    });
    expect(view.material[2]).toBe(0);
    expect(view.material[0]).toBe(0);
    expect(view.removedCount).toBe(2);
    expect(view.simTimeMs).toBe(10);
    expect(view.forceN).toBe(0.32);
    expect(view.audioHz).toBe(440);
    expect(view.warning).toBe("RED");
  });

  it("counts a voxel once even if repeated in later frames", () => {
    const view = tinyView();
    const frame = { t: 5, removed: [[0, 0, 0]] as any, forceN: 0, audioHz: 0, warning: "NONE" as const };
    view.applyFrame(frame);
    view.applyFrame({ ...frame, t: 10 });
    expect(view.removedCount).toBe(1);
  });

  it("refuses zones on a session created without guidance", () => {
    const vol = decodeVolume(fixture("tiny.capv"));
    const plan = decodePlan(fixture("tiny.capp"));
    expect(() => new SessionView({
      caseId: "tiny", labels: vol.labels, spec: vol.spec,
      guidanceGranted: false, zones: plan.zones, homePoseMm: [0, 0, 0],
    })).toThrow(/without guidance/);
    const view = tinyView(false);
    expect(() => view.setOverlay(plan.zones)).toThrow(/without guidance/);
  });

  it("drops the zone buffer entirely when the overlay turns off", () => {
    const view = tinyView();
    expect(view.overlayOn).toBe(true);
    view.setOverlay(null);
    expect(view.zones).toBeNull();
    expect(view.overlayOn).toBe(false);
    // No residual per-voxel zone data anywhere in the state: the only
    // remaining typed array is the 0/1 material mask.
    const arrays = Object.values(view).filter(v => ArrayBuffer.isView(v));
    expect(arrays).toEqual([view.material]);
    expect(Math.max(...Array.from(view.material))).toBeLessThanOrEqual(1);
  });

  it("restores the overlay from freshly fetched plan bytes", () => {
    const view = tinyView();
    view.setOverlay(null);
    const plan = decodePlan(fixture("tiny.capp"));
    view.setOverlay(plan.zones);
    expect(view.overlayOn).toBe(true);
    expect(view.zones![0]).toBe(2);
  });

  it("validates overlay length against the grid", () => {
    const view = tinyView();
    expect(() => view.setOverlay(new Uint8Array(5))).toThrow(/does not match dims/);
  });

  it("ignores removals outside the grid rather than corrupting state", () => {
    const view = tinyView();
    view.applyFrame({ t: 5, removed: [[99, 99, 99]], forceN: 0, audioHz: 0, warning: "NONE" });
    expect(view.removedCount).toBe(0);
  });
});
