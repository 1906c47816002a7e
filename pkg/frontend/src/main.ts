/**
 * Browser entry point: one session at a time against the service that
 * serves this page.  All zone, force, audio, and warning values shown here
 * arrive from the server; the page computes none of them.
 */

import { DrillTone, defaultAudioContext } from "./audio.js";
import {
  CaseInfo, FetchLike, PoseStream, createSession, fetchPlan, fetchVolume,
  finishSession, listCases,
} from "./client.js";
import { Vec3, fractionFromWorld, worldFromFraction } from "./grid.js";
import { planeAxes, renderPoints, renderSlice } from "./slices.js";
import { SessionView } from "./state.js";
import {
  UiRefs, blitRaster, buildUi, drawCrosshair, setBanner, setForce,
  setWarning, showDialog,
} from "./ui.js";

const getFn: FetchLike = url => fetch(url);
const postFn = (url: string, body: string | null) =>
  fetch(url, {
    method: "POST",
    headers: body === null ? {} : { "content-type": "application/json" },
    body,
  });

interface Live {
  view: SessionView;
  stream: PoseStream;
  tone: DrillTone;
  fMaxN: number;
  finishing: boolean;
}

function paneScale(dims: Vec3): number {
  const m = Math.max(dims[0], dims[1], dims[2]);
  return Math.max(4, Math.floor(340 / m));
}

function renderAll(refs: UiRefs, live: Live, orbit: { yaw: number; pitch: number }): void {
  const view = live.view;
  const scale = paneScale(view.spec.dims);
  for (const pane of refs.slices) {
    const raster = renderSlice(view, pane.normal, view.slice[pane.normal]);
    blitRaster(pane.canvas, raster, scale);
    const [u, v] = planeAxes(pane.normal);
    drawCrosshair(
      pane.canvas,
      fractionFromWorld(view.spec, u, view.cursorMm[u]),
      fractionFromWorld(view.spec, v, view.cursorMm[v]));
    pane.title.textContent =
      `${["sagittal (x)", "coronal (y)", "axial (z)"][pane.normal]} #${view.slice[pane.normal]}`;
  }
  blitRaster(refs.points, renderPoints(view, 360, orbit.yaw, orbit.pitch), 1);
  setForce(refs, view.forceN, live.fMaxN);
  setWarning(refs, view.warning);
  refs.audioLabel.textContent = view.audioHz > 0 ? `${view.audioHz.toFixed(0)} Hz` : "quiet";
  refs.statusLine.textContent =
    `t = ${(view.simTimeMs / 1000).toFixed(2)} s   removed = ${view.removedCount}` +
    `   powered = ${view.powered ? "on" : "off"}   overlay = ${view.overlayOn ? "on" : "off"}`;
}

function wirePointer(refs: UiRefs, live: Live): void {
  const view = live.view;
  for (const pane of refs.slices) {
    const [u, v] = planeAxes(pane.normal);
    pane.canvas.addEventListener("pointermove", e => {
      const rect = pane.canvas.getBoundingClientRect();
      view.cursorMm[u] = worldFromFraction(view.spec, u, (e.clientX - rect.left) / rect.width);
      view.cursorMm[v] = worldFromFraction(view.spec, v, (e.clientY - rect.top) / rect.height);
    });
    pane.canvas.addEventListener("pointerdown", e => {
      if (e.button === 0) {
        view.powered = true;
        pane.canvas.setPointerCapture(e.pointerId);
      }
    });
    pane.canvas.addEventListener("pointerup", () => { view.powered = false; });
    pane.canvas.addEventListener("pointercancel", () => { view.powered = false; });
    pane.canvas.addEventListener("wheel", e => {
      e.preventDefault();
      const step = e.deltaY > 0 ? -1 : 1;
      if (e.shiftKey) {
        const n = view.spec.dims[pane.normal];
        view.slice[pane.normal] = Math.min(n - 1, Math.max(0, view.slice[pane.normal] + step));
      } else {
        view.cursorMm[pane.normal] += step * view.spec.spacingMm[pane.normal];
      }
    }, { passive: false });
  }
}

function wireOrbit(refs: UiRefs, orbit: { yaw: number; pitch: number }): void {
  let dragging = false;
  let last: [number, number] = [0, 0];
  refs.points.addEventListener("pointerdown", e => {
    dragging = true;
    last = [e.clientX, e.clientY];
  });
  refs.points.addEventListener("pointermove", e => {
    if (!dragging) return;
    orbit.yaw += 0.01 * (e.clientX - last[0]);
    orbit.pitch += 0.01 * (e.clientY - last[1]);
    orbit.pitch = Math.min(1.5, Math.max(-1.5, orbit.pitch));
    last = [e.clientX, e.clientY];
  });
  refs.points.addEventListener("pointerup", () => { dragging = false; });
  refs.points.addEventListener("pointercancel", () => { dragging = false; });
}

async function startSession(refs: UiRefs, info: CaseInfo, guidance: boolean): Promise<Live> {
  const base = location.origin;
  const session = await createSession(base, info.caseId, guidance, postFn);
  const volume = await fetchVolume(base, info.caseId, getFn);
  const zones = session.guidanceEnabled
    ? (await fetchPlan(base, info.caseId, getFn)).zones
    : null;

  const view = new SessionView({
    caseId: info.caseId,
    labels: volume.labels,
    spec: volume.spec,
    guidanceGranted: session.guidanceEnabled,
    zones,
    homePoseMm: session.homePoseMm,
  });

  const wsScheme = location.protocol === "https:" ? "wss:" : "ws:";
  const socket = new WebSocket(`${wsScheme}//${location.host}/sessions/${session.sessionId}/stream`);
  const tone = new DrillTone(defaultAudioContext);
  const live: Live = { view, stream: null as unknown as PoseStream, tone, fMaxN: session.cfg.f_max_n, finishing: false };

  live.stream = new PoseStream(
    socket,
    session.cfg.tick_ms,
    () => ({ posMm: [...view.cursorMm] as Vec3, on: view.powered }),
    {
      onFrame: frame => {
        view.applyFrame(frame);
        tone.update(frame.audioHz);
      },
      onProtocolError: err => setBanner(refs, `${err.error}: ${err.detail}`),
      onEnded: () => {
        tone.update(0);
        if (!live.finishing) showDialog(refs, "session ended: the connection closed");
      },
    });
  live.stream.start();

  refs.finishBtn.onclick = async () => {
    live.finishing = true;
    live.stream.stop();
    refs.finishBtn.disabled = true;
    try {
      const doc = await finishSession(base, session.sessionId, postFn);
      refs.metrics.textContent = JSON.stringify(doc, null, 2);
      refs.metrics.classList.remove("hidden");
    } catch (e) {
      setBanner(refs, String(e));
    }
  };

  refs.overlayBox.disabled = !session.guidanceEnabled;
  refs.overlayBox.checked = session.guidanceEnabled;
  refs.overlayBox.onchange = async () => {
    if (!refs.overlayBox.checked) {
      view.setOverlay(null);
      return;
    }
    try {
      view.setOverlay((await fetchPlan(base, info.caseId, getFn)).zones);
    } catch (e) {
      refs.overlayBox.checked = false;
      setBanner(refs, String(e));
    }
  };

  return live;
}

async function boot(doc: Document): Promise<void> {
  const root = doc.getElementById("app");
  if (!root) return;
  const refs = buildUi(doc, root);
  refs.dialogClose.onclick = () => refs.dialog.classList.add("hidden");

  let cases: CaseInfo[] = [];
  try {
    cases = await listCases(location.origin, getFn);
  } catch (e) {
    setBanner(refs, `cannot list cases: ${e}`);
    return;
  }
  for (const c of cases) {
    const opt = doc.createElement("option");
    opt.value = c.caseId;
    opt.textContent = `${c.caseId} (${c.dims.join("x")})`;
    refs.caseSelect.append(opt);
  }

  let live: Live | null = null;
  const orbit = { yaw: 0.6, pitch: 0.5 };
  wireOrbit(refs, orbit);

  doc.addEventListener("keydown", e => {
    if (e.code === "Space" && live) {
      e.preventDefault();
      live.view.powered = true;
    }
  });
  doc.addEventListener("keyup", e => {
    if (e.code === "Space" && live) live.view.powered = false;
  });

  refs.startBtn.onclick = async () => {
    const info = cases.find(c => c.caseId === refs.caseSelect.value);
    if (!info) return;
    refs.startBtn.disabled = true;
    refs.caseSelect.disabled = true;
    refs.guidanceBox.disabled = true;
    setBanner(refs, null);
    try {
      live = await startSession(refs, info, refs.guidanceBox.checked);
      refs.finishBtn.disabled = false;
      wirePointer(refs, live);
    } catch (e) {
      setBanner(refs, String(e));
      refs.startBtn.disabled = false;
      refs.caseSelect.disabled = false;
      refs.guidanceBox.disabled = false;
      return;
    }
    const loop = () => {
      if (live) renderAll(refs, live, orbit);
      requestAnimationFrame(loop);
    };
    requestAnimationFrame(loop);
  };
}

if (typeof document !== "undefined") {
  void boot(document);
}
