/**
 * The full drill loop against a scripted server, mirroring the manual
 * in-browser walkthrough: power over green clears voxels within two
 * renders, a red frame raises the warning box, overlay off leaves no zone
 * coloring, and pitch rises at the bone surface.  Frame payloads are
 * copied from real service output on the slab case.
 */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import { AudioCtxLike, DrillTone } from "../src/audio.js";
import { PoseStream, SocketLike } from "../src/client.js";
import { decodePlan, decodeVolume } from "../src/formats.js";
import { Vec3 } from "../src/grid.js";
import { pixelAt, renderSlice } from "../src/slices.js";
import { SessionView } from "../src/state.js";
import { UiRefs, setBanner, setForce, setWarning, showDialog } from "../src/ui.js";

function fixture(name: string): Uint8Array {
  return new Uint8Array(readFileSync(new URL(`./fixtures/${name}`, import.meta.url)));
}

function slabView(guidance = true): SessionView {
  const vol = decodeVolume(fixture("slab.capv"));
  const plan = decodePlan(fixture("slab.capp"));
  return new SessionView({
    caseId: "slab-small",
    labels: vol.labels,
    spec: vol.spec,
    guidanceGranted: guidance,
    zones: guidance ? plan.zones : null,
    homePoseMm: [4.08, 4.08, 12.72],
  });
}

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev: any) => void) | null = null;
  onmessage: ((ev: any) => void) | null = null;
  onclose: ((ev: any) => void) | null = null;
  /** Scripted reply per inbound frame, in order. */
  replies: string[] = [];

  send(data: string): void {
    this.sent.push(data);
    const reply = this.replies.shift();
    if (reply !== undefined) this.onmessage?.({ data: reply });
  }

  close(): void {
    if (!this.closed) {
      this.closed = true;
      this.onclose?.({});
    }
  }
}

/** Minimal stand-ins for the handful of DOM members ui.ts touches. */
function fakeEl(): any {
  const classes = new Set<string>(["hidden"]);
  return {
    classes,
    textContent: "",
    style: {} as Record<string, string>,
    classList: {
      toggle(c: string, force: boolean) {
        if (force) classes.add(c);
        else classes.delete(c);
      },
      add(c: string) { classes.add(c); },
      remove(c: string) { classes.delete(c); },
    },
  };
}

function fakeRefs() {
  const refs = {
    banner: fakeEl(),
    warningBox: fakeEl(),
    forceFill: fakeEl(),
    forceLabel: fakeEl(),
    dialog: fakeEl(),
    dialogText: fakeEl(),
  };
  return refs as unknown as UiRefs & typeof refs;
}

function makeFakeAudio() {
  const record = { freqs: [] as number[], gains: [] as number[], started: 0 };
  const ctx: AudioCtxLike = {
    createOscillator: () => ({
      frequency: { set value(v: number) { record.freqs.push(v); } } as { value: number },
      connect: () => {},
      start: () => { record.started += 1; },
    }),
    createGain: () => ({
      gain: { set value(v: number) { record.gains.push(v); } } as { value: number },
      connect: () => {},
    }),
    destination: {},
  };
  return { ctx, record };
}

// Real outbound frames captured from the service on the slab case.
const GREEN_REMOVAL =
  '{"t":5,"removed":[[8,8,17,"GREEN"]],"force_n":3.2,"audio_hz":299.2,"warning":"NONE"}';
const RED_REMOVAL =
  '{"t":10,"removed":[[8,8,10,"RED"]],"force_n":3.2,"audio_hz":220.0,"warning":"RED"}';
const SURFACE_TOUCH =
  '{"t":15,"removed":[[8,8,19,"GREEN"]],"force_n":3.2,"audio_hz":440.0,"warning":"NONE"}';
const DEEP_CUT =
  '{"t":20,"removed":[],"force_n":0.32,"audio_hz":220.0,"warning":"NONE"}';
const IDLE = '{"t":25,"removed":[],"force_n":0.0,"audio_hz":0.0,"warning":"NONE"}';

function wire(view: SessionView, socket: FakeSocket, tone: DrillTone, refs: ReturnType<typeof fakeRefs>) {
  const pose = { posMm: [...view.cursorMm] as Vec3, on: false };
  const stream = new PoseStream(socket, 5, () => ({ posMm: pose.posMm, on: pose.on }), {
    onFrame: frame => {
      view.applyFrame(frame);
      tone.update(frame.audioHz);
      setWarning(refs, view.warning);
      setForce(refs, view.forceN, 3.2);
    },
    onProtocolError: err => setBanner(refs, `${err.error}: ${err.detail}`),
    onEnded: () => showDialog(refs, "session ended: the connection closed"),
  });
  stream.start((cb) => { (pose as any).pump = cb; return 0 as any; });
  return { stream, pose };
}

describe("drill loop", () => {
  it("clears a green voxel within two renders of the server message", () => {
    const view = slabView();
    const socket = new FakeSocket();
    const { ctx } = makeFakeAudio();
    const refs = fakeRefs();
    const { stream, pose } = wire(view, socket, new DrillTone(() => ctx), refs);

    // Coronal pane through the canal: voxel (8,8,17) sits at pixel (8,17).
    expect(pixelAt(renderSlice(view, 1, 8), 8, 17)).toEqual([0, 255, 0, 255]);

    pose.posMm = [4.08, 4.08, 8.64];
    pose.on = true;
    socket.replies.push(GREEN_REMOVAL);
    stream.tick();

    let renders = 0;
    let cleared: boolean;
    do {
      renders += 1;
      cleared = pixelAt(renderSlice(view, 1, 8), 8, 17).join(",") === "14,16,20,255";
    } while (!cleared && renders < 2);
    expect(cleared).toBe(true);
    expect(renders).toBeLessThanOrEqual(2);
    expect(view.removedCount).toBe(1);
    expect(JSON.parse(socket.sent[0])).toEqual({ t: 0, pos_mm: [4.08, 4.08, 8.64], on: true });
  });

  it("raises the warning text box on a RED frame and clears it after", () => {
    const view = slabView();
    const socket = new FakeSocket();
    const { ctx } = makeFakeAudio();
    const refs = fakeRefs();
    const { stream, pose } = wire(view, socket, new DrillTone(() => ctx), refs);

    pose.on = true;
    socket.replies.push(RED_REMOVAL);
    stream.tick();
    expect(view.warning).toBe("RED");
    expect(refs.warningBox.classes.has("hidden")).toBe(false);
    expect(refs.warningBox.classes.has("warning-red")).toBe(true);
    expect(refs.warningBox.textContent.toLowerCase()).toContain("red");

    socket.replies.push(IDLE);
    stream.tick();
    expect(refs.warningBox.classes.has("hidden")).toBe(true);
  });

  it("leaves no zone coloring anywhere once the overlay is off", () => {
    const view = slabView();
    view.setOverlay(null);
    const anchors = new Set(["0,255,0,255", "255,255,0,255", "255,0,0,255"]);
    for (const normal of [0, 1, 2]) {
      for (let idx = 0; idx < view.spec.dims[normal]; idx++) {
        const raster = renderSlice(view, normal, idx);
        for (let py = 0; py < raster.height; py++) {
          for (let px = 0; px < raster.width; px++) {
            expect(anchors.has(pixelAt(raster, px, py).join(","))).toBe(false);
          }
        }
      }
    }
    const arrays = Object.values(view).filter(v => ArrayBuffer.isView(v));
    expect(arrays).toEqual([view.material]);
  });

  it("raises the pitch at the bone surface relative to deep cancellous", () => {
    const view = slabView();
    const socket = new FakeSocket();
    const { ctx, record } = makeFakeAudio();
    const tone = new DrillTone(() => ctx);
    const refs = fakeRefs();
    const { stream, pose } = wire(view, socket, tone, refs);

    pose.on = true;
    socket.replies.push(SURFACE_TOUCH, DEEP_CUT, IDLE);
    stream.tick();
    const surfaceHz = tone.frequencyHz;
    stream.tick();
    const deepHz = tone.frequencyHz;
    stream.tick();

    expect(surfaceHz).toBe(440);
    expect(deepHz).toBe(220);
    expect(surfaceHz).toBeGreaterThan(deepHz);
    expect(tone.frequencyHz).toBe(0);
    expect(record.freqs).toEqual([440, 220]);
    expect(record.gains[record.gains.length - 1]).toBe(0);
    expect(record.started).toBe(1);
  });

  it("keeps the force meter on the server's value", () => {
    const view = slabView();
    const socket = new FakeSocket();
    const { ctx } = makeFakeAudio();
    const refs = fakeRefs();
    const { stream, pose } = wire(view, socket, new DrillTone(() => ctx), refs);

    pose.on = true;
    socket.replies.push(GREEN_REMOVAL, DEEP_CUT);
    stream.tick();
    expect(refs.forceFill.style.width).toBe("100.0%");
    expect(refs.forceLabel.textContent).toBe("3.20 N");
    stream.tick();
    expect(refs.forceFill.style.width).toBe("10.0%");
    expect(refs.forceLabel.textContent).toBe("0.32 N");
  });

  it("shows the session-ended dialog when the socket drops", () => {
    const view = slabView();
    const socket = new FakeSocket();
    const { ctx } = makeFakeAudio();
    const refs = fakeRefs();
    wire(view, socket, new DrillTone(() => ctx), refs);

    expect(refs.dialog.classes.has("hidden")).toBe(true);
    socket.close();
    expect(refs.dialog.classes.has("hidden")).toBe(false);
    expect(refs.dialogText.textContent).toContain("session ended");
  });

  it("banners a server protocol error without ending the session", () => {
    const view = slabView();
    const socket = new FakeSocket();
    const { ctx } = makeFakeAudio();
    const refs = fakeRefs();
    const { stream, pose } = wire(view, socket, new DrillTone(() => ctx), refs);

    socket.replies.push('{"error":"MalformedMessage","detail":"pos_mm must be three finite numbers"}');
    stream.tick();
    expect(refs.banner.classes.has("hidden")).toBe(false);
    expect(refs.banner.textContent).toContain("MalformedMessage");
    expect(refs.dialog.classes.has("hidden")).toBe(true);

    pose.on = true;
    socket.replies.push(GREEN_REMOVAL);
    stream.tick();
    expect(view.removedCount).toBe(1);
  });
});
