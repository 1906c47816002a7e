/**
 * Session-service client: REST calls plus the pose stream.
 *
 * The socket and timer are injected so tests can drive the cadence by
 * hand.  One PoseStream owns one socket for one session; a dropped socket
 * ends the attempt (the server allows no mid-session reconnect).
 */

import { DecodeError, PlanData, VolumeData, decodePlan, decodeVolume } from "./formats.js";
import { Vec3 } from "./grid.js";
import { ProtocolError, ServerFrame, parseServerMessage } from "./state.js";

export type FetchLike = (url: string) => Promise<{
  ok: boolean;
  status: number;
  arrayBuffer(): Promise<ArrayBuffer>;
  json(): Promise<any>;
}>;

export interface CaseInfo {
  caseId: string;
  dims: Vec3;
  spacingMm: Vec3;
  homePoseMm: Vec3;
}

export interface SessionInfo {
  sessionId: string;
  caseId: string;
  guidanceEnabled: boolean;
  label: string;
  homePoseMm: Vec3;
  /** Engine parameters as configured server-side; tick_ms sets our cadence. */
  cfg: { tick_ms: number; f_max_n: number; [k: string]: number };
}

async function getJson(fetchFn: FetchLike, url: string): Promise<any> {
  const res = await fetchFn(url);
  if (!res.ok) {
    let detail = `HTTP ${res.status}`;
    try {
      const doc = await res.json();
      if (doc && doc.error) detail = `${doc.error}: ${doc.detail ?? ""}`;
    } catch { /* body was not JSON; keep the status text */ }
    throw new Error(`${url}: ${detail}`);
  }
  return res.json();
}

export async function listCases(base: string, fetchFn: FetchLike): Promise<CaseInfo[]> {
  const doc = await getJson(fetchFn, `${base}/cases`);
  return (doc.cases ?? []).map((c: any) => ({
    caseId: c.case_id,
    dims: c.dims,
    spacingMm: c.spacing_mm,
    homePoseMm: c.home_pose_mm,
  }));
}

async function getBytes(fetchFn: FetchLike, url: string): Promise<Uint8Array> {
  const res = await fetchFn(url);
  if (!res.ok) throw new DecodeError(`${url}: HTTP ${res.status}`);
  return new Uint8Array(await res.arrayBuffer());
}

export async function fetchVolume(base: string, caseId: string, fetchFn: FetchLike): Promise<VolumeData> {
  return decodeVolume(await getBytes(fetchFn, `${base}/cases/${caseId}/volume`));
}

export async function fetchPlan(base: string, caseId: string, fetchFn: FetchLike): Promise<PlanData> {
  return decodePlan(await getBytes(fetchFn, `${base}/cases/${caseId}/plan`));
}

type PostLike = (url: string, body: string | null) => Promise<{
  ok: boolean;
  status: number;
  json(): Promise<any>;
}>;

export async function createSession(
  base: string, caseId: string, guidance: boolean, postFn: PostLike,
): Promise<SessionInfo> {
  const res = await postFn(`${base}/sessions`, JSON.stringify({
    case_id: caseId,
    guidance_enabled: guidance,
  }));
  const doc = await res.json();
  if (!res.ok) throw new Error(`create session: ${doc.error ?? res.status}: ${doc.detail ?? ""}`);
  return {
    sessionId: doc.session_id,
    caseId: doc.case_id,
    guidanceEnabled: doc.guidance_enabled,
    label: doc.label,
    homePoseMm: doc.home_pose_mm,
    cfg: doc.cfg,
  };
}

export async function finishSession(base: string, sessionId: string, postFn: PostLike): Promise<any> {
  const res = await postFn(`${base}/sessions/${sessionId}/finish`, null);
  const doc = await res.json();
  if (!res.ok) throw new Error(`finish session: ${doc.error ?? res.status}: ${doc.detail ?? ""}`);
  return doc;
}

/** The subset of WebSocket the stream uses; tests pass a scripted fake. */
export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: ((ev: any) => void) | null;
  onmessage: ((ev: any) => void) | null;
  onclose: ((ev: any) => void) | null;
}

export interface StreamHandlers {
  onFrame(frame: ServerFrame): void;
  /** Server rejected one inbound frame; the socket stays open. */
  onProtocolError(err: ProtocolError): void;
  /** Socket closed for any reason; the session attempt is over. */
  onEnded(): void;
}

type IntervalFn = (cb: () => void, ms: number) => ReturnType<typeof setInterval>;

/**
 * Streams {t, pos_mm, on} frames at the engine tick cadence and routes
 * inbound frames to the handlers.  Timestamps are multiples of tick_ms;
 * the server stamps events from its own clock, ours are advisory.
 */
export class PoseStream {
  private t = 0;
  private timer: ReturnType<typeof setInterval> | null = null;
  private ended = false;

  constructor(
    private readonly socket: SocketLike,
    private readonly tickMs: number,
    private readonly pose: () => { posMm: Vec3; on: boolean },
    private readonly handlers: StreamHandlers,
  ) {
    socket.onmessage = ev => {
      const msg = parseServerMessage(String(ev.data));
      if ("error" in msg) this.handlers.onProtocolError(msg);
      else this.handlers.onFrame(msg);
    };
    socket.onclose = () => {
      this.stopTimer();
      if (!this.ended) {
        this.ended = true;
        this.handlers.onEnded();
      }
    };
  }

  /** Begin the cadence once the socket is open. */
  start(intervalFn: IntervalFn = (cb, ms) => setInterval(cb, ms)): void {
    const begin = () => {
      if (this.timer === null && !this.ended) {
        this.timer = intervalFn(() => this.tick(), this.tickMs);
      }
    };
    // readyState 0 means still connecting; fakes without one start at once.
    if ((this.socket as { readyState?: number }).readyState === 0) {
      this.socket.onopen = begin;
    } else {
      begin();
    }
  }

  /** Send one pose frame; exposed so tests can drive ticks directly. */
  tick(): void {
    if (this.ended) return;
    const { posMm, on } = this.pose();
    this.socket.send(JSON.stringify({ t: this.t, pos_mm: posMm, on }));
    this.t += this.tickMs;
  }

  private stopTimer(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  /** Stop sending and close; used by the finish flow (onEnded still fires). */
  stop(): void {
    this.stopTimer();
    this.socket.close();
  }
}
