/**
 * REST mapping and pose-stream behavior against scripted fakes.  Response
 * bodies copy the service's actual shapes so a field rename on either side
 * fails here first.
 */

import { readFileSync } from "node:fs";
import { describe, expect, it } from "vitest";

import {
  FetchLike, PoseStream, SocketLike, createSession, fetchPlan, fetchVolume,
  finishSession, listCases,
} from "../src/client.js";
import { DecodeError } from "../src/formats.js";
import { ProtocolError, ServerFrame } from "../src/state.js";

function fixture(name: string): Uint8Array {
  return new Uint8Array(readFileSync(new URL(`./fixtures/${name}`, import.meta.url)));
}

function jsonResponse(doc: unknown, status = 200) {
  return {
    ok: status < 400,
    status,
    arrayBuffer: async () => new ArrayBuffer(0),
    json: async () => doc,
  };
}

function bytesResponse(bytes: Uint8Array, status = 200) {
  return {
    ok: status < 400,
    status,
    arrayBuffer: async () => bytes.slice().buffer,
    json: async () => ({}),
  };
}

class FakeSocket implements SocketLike {
  sent: string[] = [];
  closed = false;
  onopen: ((ev: any) => void) | null = null;
  onmessage: ((ev: any) => void) | null = null;
  onclose: ((ev: any) => void) | null = null;

  send(data: string): void {
    if (this.closed) throw new Error("send after close");
    this.sent.push(data);
  }

  close(): void {
    if (!this.closed) {
      this.closed = true;
      this.onclose?.({});
    }
  }

  emit(data: string): void {
    this.onmessage?.({ data });
  }
}

interface Captured {
  frames: ServerFrame[];
  errors: ProtocolError[];
  ended: number;
}

function makeStream(socket: FakeSocket, pose = { posMm: [1, 2, 3] as [number, number, number], on: false }) {
  const got: Captured = { frames: [], errors: [], ended: 0 };
  const stream = new PoseStream(socket, 5, () => pose, {
    onFrame: f => got.frames.push(f),
    onProtocolError: e => got.errors.push(e),
    onEnded: () => { got.ended += 1; },
  });
  return { stream, got, pose };
}

describe("REST client", () => {
  it("lists cases with the service's field names", async () => {
    const urls: string[] = [];
    const fetchFn: FetchLike = async url => {
      urls.push(url);
      return jsonResponse({
        cases: [{
          case_id: "slab-small", dims: [16, 16, 28],
          spacing_mm: [0.48, 0.48, 0.48], home_pose_mm: [4.08, 4.08, 12.72],
        }],
      });
    };
    const cases = await listCases("http://svc", fetchFn);
    expect(urls).toEqual(["http://svc/cases"]);
    expect(cases).toEqual([{
      caseId: "slab-small", dims: [16, 16, 28],
      spacingMm: [0.48, 0.48, 0.48], homePoseMm: [4.08, 4.08, 12.72],
    }]);
  });

  it("fetches and decodes volume and plan bytes", async () => {
    const fetchFn: FetchLike = async url =>
      bytesResponse(fixture(url.endsWith("/volume") ? "tiny.capv" : "tiny.capp"));
    const vol = await fetchVolume("http://svc", "tiny", fetchFn);
    expect(vol.spec.dims).toEqual([3, 2, 2]);
    const plan = await fetchPlan("http://svc", "tiny", fetchFn);
    expect(plan.counts.RED).toBe(2);
  });

  it("turns a failed fetch into a DecodeError for the banner", async () => {
    const fetchFn: FetchLike = async () => bytesResponse(new Uint8Array(), 404);
    await expect(fetchVolume("http://svc", "nope", fetchFn)).rejects.toThrow(DecodeError);
  });

  it("turns corrupt bytes into a DecodeError for the banner", async () => {
    const fetchFn: FetchLike = async () => bytesResponse(new TextEncoder().encode("garbage\n"));
    await expect(fetchPlan("http://svc", "tiny", fetchFn)).rejects.toThrow(DecodeError);
  });

  it("creates a session with the documented request body", async () => {
    const posts: { url: string; body: string | null }[] = [];
    const postFn = async (url: string, body: string | null) => {
      posts.push({ url, body });
      return jsonResponse({
        session_id: "abc123", case_id: "slab-small", guidance_enabled: false,
        label: "unguided", home_pose_mm: [4.08, 4.08, 12.72],
        cfg: { tick_ms: 5, f_max_n: 3.2 },
      }, 201);
    };
    const session = await createSession("http://svc", "slab-small", false, postFn);
    expect(posts).toEqual([{
      url: "http://svc/sessions",
      body: '{"case_id":"slab-small","guidance_enabled":false}',
    }]);
    expect(session.sessionId).toBe("abc123");
    expect(session.guidanceEnabled).toBe(false);
    expect(session.label).toBe("unguided");
    expect(session.cfg.tick_ms).toBe(5);
  });

  it("surfaces service errors from create and finish", async () => {
    const full = async () => jsonResponse({ error: "ResourceExhausted", detail: "4 sessions already active" }, 429);
    await expect(createSession("http://svc", "slab-small", true, full))
      .rejects.toThrow(/ResourceExhausted/);
    const closed = async () => jsonResponse({ error: "SessionClosed", detail: "already finished" }, 409);
    await expect(finishSession("http://svc", "abc", closed)).rejects.toThrow(/SessionClosed/);
  });

  it("returns the metrics document from finish", async () => {
    const doc = { session_id: "abc", completion_rates: { GREEN: 50.0 }, breach_count: 0 };
    const metrics = await finishSession("http://svc", "abc", async () => jsonResponse(doc));
    expect(metrics).toEqual(doc);
  });
});

describe("PoseStream", () => {
  it("sends {t, pos_mm, on} with t in tick multiples", () => {
    const socket = new FakeSocket();
    const { stream, pose } = makeStream(socket);
    stream.tick();
    pose.posMm = [4, 5, 6];
    pose.on = true;
    stream.tick();
    stream.tick();
    expect(socket.sent.map(s => JSON.parse(s))).toEqual([
      { t: 0, pos_mm: [1, 2, 3], on: false },
      { t: 5, pos_mm: [4, 5, 6], on: true },
      { t: 10, pos_mm: [4, 5, 6], on: true },
    ]);
  });

  it("drives the cadence through the injected interval", () => {
    const socket = new FakeSocket();
    const { stream } = makeStream(socket);
    let cb: (() => void) | null = null;
    let ms = 0;
    stream.start((fn, m) => { cb = fn; ms = m; return 0 as any; });
    expect(ms).toBe(5);
    cb!();
    cb!();
    expect(socket.sent.length).toBe(2);
  });

  it("waits for open when the socket is still connecting", () => {
    const socket = new FakeSocket();
    (socket as any).readyState = 0;
    const { stream } = makeStream(socket);
    let started = false;
    stream.start(fn => { started = true; fn(); return 0 as any; });
    expect(started).toBe(false);
    expect(socket.onopen).not.toBeNull();
    socket.onopen!({});
    expect(started).toBe(true);
    expect(socket.sent.length).toBe(1);
  });

  it("dispatches frames and keeps running after a server error frame", () => {
    const socket = new FakeSocket();
    const { got } = makeStream(socket);
    socket.emit('{"t":5,"removed":[],"force_n":0.0,"audio_hz":220.0,"warning":"NONE"}');
    socket.emit('{"error":"MalformedMessage","detail":"t must be an int"}');
    socket.emit('{"t":10,"removed":[[1,2,3,"GREEN"]],"force_n":0.32,"audio_hz":440.0,"warning":"NONE"}');
    expect(got.frames.map(f => f.t)).toEqual([5, 10]);
    expect(got.errors).toEqual([{ error: "MalformedMessage", detail: "t must be an int" }]);
    expect(got.ended).toBe(0);
    expect(socket.closed).toBe(false);
  });

  it("flags locally unparseable frames without closing", () => {
    const socket = new FakeSocket();
    const { got } = makeStream(socket);
    socket.emit("!!not json!!");
    expect(got.errors[0].error).toBe("MalformedMessage");
    expect(got.ended).toBe(0);
  });

  it("reports a dropped socket exactly once and stops ticking", () => {
    const socket = new FakeSocket();
    const { stream, got } = makeStream(socket);
    stream.tick();
    socket.close();
    stream.tick();
    expect(got.ended).toBe(1);
    expect(socket.sent.length).toBe(1);
  });

  it("stop() closes the socket and still signals the end of the attempt", () => {
    const socket = new FakeSocket();
    const { stream, got } = makeStream(socket);
    stream.stop();
    expect(socket.closed).toBe(true);
    expect(got.ended).toBe(1);
  });
});
