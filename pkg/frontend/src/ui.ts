/**
 * DOM construction and blitting.  Everything stateful lives in state.ts;
 * this layer only builds elements, copies rasters onto canvases, and
 * toggles visibility classes.  main.ts wires the events.
 */

import { Raster } from "./slices.js";
import { WarningLevel } from "./state.js";

export interface SlicePane {
  canvas: HTMLCanvasElement;
  /** Axis this pane cuts: 0 sagittal, 1 coronal, 2 axial. */
  normal: number;
  title: HTMLElement;
}

export interface UiRefs {
  caseSelect: HTMLSelectElement;
  guidanceBox: HTMLInputElement;
  overlayBox: HTMLInputElement;
  startBtn: HTMLButtonElement;
  finishBtn: HTMLButtonElement;
  banner: HTMLDivElement;
  warningBox: HTMLDivElement;
  forceFill: HTMLDivElement;
  forceLabel: HTMLSpanElement;
  audioLabel: HTMLSpanElement;
  statusLine: HTMLDivElement;
  slices: SlicePane[];
  points: HTMLCanvasElement;
  metrics: HTMLPreElement;
  dialog: HTMLDivElement;
  dialogText: HTMLDivElement;
  dialogClose: HTMLButtonElement;
}

function el<K extends keyof HTMLElementTagNameMap>(
  doc: Document, tag: K, cls?: string, text?: string,
): HTMLElementTagNameMap[K] {
  const node = doc.createElement(tag);
  if (cls) node.className = cls;
  if (text !== undefined) node.textContent = text;
  return node;
}

const SLICE_TITLES = ["sagittal (x)", "coronal (y)", "axial (z)"];

export function buildUi(doc: Document, root: HTMLElement): UiRefs {
  const controls = el(doc, "div", "controls");
  const caseSelect = el(doc, "select");
  const guidanceBox = el(doc, "input");
  guidanceBox.type = "checkbox";
  guidanceBox.checked = true;
  const overlayBox = el(doc, "input");
  overlayBox.type = "checkbox";
  overlayBox.checked = true;
  overlayBox.disabled = true;
  const startBtn = el(doc, "button", "", "start session");
  const finishBtn = el(doc, "button", "", "finish");
  finishBtn.disabled = true;

  const guidanceLabel = el(doc, "label", "", " guidance");
  guidanceLabel.prepend(guidanceBox);
  const overlayLabel = el(doc, "label", "", " overlay");
  overlayLabel.prepend(overlayBox);
  controls.append(caseSelect, guidanceLabel, startBtn, overlayLabel, finishBtn);

  const banner = el(doc, "div", "banner hidden");
  const warningBox = el(doc, "div", "warning hidden");

  const meterRow = el(doc, "div", "meter-row");
  const meter = el(doc, "div", "meter");
  const forceFill = el(doc, "div", "meter-fill");
  meter.append(forceFill);
  const forceLabel = el(doc, "span", "readout");
  const audioLabel = el(doc, "span", "readout");
  meterRow.append(el(doc, "span", "", "force "), meter, forceLabel, audioLabel);

  const statusLine = el(doc, "div", "status");

  const panes = el(doc, "div", "panes");
  const slices: SlicePane[] = [0, 1, 2].map(normal => {
    const wrap = el(doc, "div", "pane");
    const title = el(doc, "div", "pane-title", SLICE_TITLES[normal]);
    const canvas = el(doc, "canvas", "slice");
    wrap.append(title, canvas);
    panes.append(wrap);
    return { canvas, normal, title };
  });
  const pointsWrap = el(doc, "div", "pane");
  pointsWrap.append(el(doc, "div", "pane-title", "3d (drag to turn)"));
  const points = el(doc, "canvas", "points");
  points.width = 360;
  points.height = 360;
  pointsWrap.append(points);
  panes.append(pointsWrap);

  const metrics = el(doc, "pre", "metrics hidden");

  const dialog = el(doc, "div", "dialog hidden");
  const dialogText = el(doc, "div");
  const dialogClose = el(doc, "button", "", "ok");
  dialog.append(dialogText, dialogClose);

  const help = el(doc, "div", "help",
    "hold the left mouse button (or space) to power the drill; move over a slice to steer; " +
    "scroll to move along the slice normal; shift+scroll to page the displayed slice");

  root.append(controls, banner, warningBox, meterRow, statusLine, panes, metrics, help, dialog);
  return {
    caseSelect, guidanceBox, overlayBox, startBtn, finishBtn, banner, warningBox,
    forceFill, forceLabel, audioLabel, statusLine, slices, points, metrics,
    dialog, dialogText, dialogClose,
  };
}

export function blitRaster(canvas: HTMLCanvasElement, raster: Raster, cssScale: number): void {
  if (canvas.width !== raster.width) canvas.width = raster.width;
  if (canvas.height !== raster.height) canvas.height = raster.height;
  canvas.style.width = `${raster.width * cssScale}px`;
  canvas.style.height = `${raster.height * cssScale}px`;
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  ctx.putImageData(new ImageData(raster.rgba, raster.width, raster.height), 0, 0);
}

/** Cursor crosshair at fractional in-plane position (fu, fv) in [0,1]. */
export function drawCrosshair(canvas: HTMLCanvasElement, fu: number, fv: number): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const x = fu * canvas.width;
  const y = fv * canvas.height;
  ctx.strokeStyle = "rgba(255,255,255,0.9)";
  ctx.lineWidth = 0.4;
  ctx.beginPath();
  ctx.moveTo(x - 2, y);
  ctx.lineTo(x + 2, y);
  ctx.moveTo(x, y - 2);
  ctx.lineTo(x, y + 2);
  ctx.stroke();
}

export function setBanner(refs: UiRefs, message: string | null): void {
  refs.banner.textContent = message ?? "";
  refs.banner.classList.toggle("hidden", message === null);
}

export function setWarning(refs: UiRefs, level: WarningLevel): void {
  refs.warningBox.classList.toggle("hidden", level === "NONE");
  refs.warningBox.classList.toggle("warning-red", level === "RED");
  refs.warningBox.classList.toggle("warning-yellow", level === "YELLOW");
  if (level === "RED") refs.warningBox.textContent = "STOP: drilling in a red no-go zone";
  else if (level === "YELLOW") refs.warningBox.textContent = "caution: yellow buffer zone";
  else refs.warningBox.textContent = "";
}

export function setForce(refs: UiRefs, forceN: number, fMaxN: number): void {
  const frac = fMaxN > 0 ? Math.min(1, Math.max(0, forceN / fMaxN)) : 0;
  refs.forceFill.style.width = `${(100 * frac).toFixed(1)}%`;
  refs.forceLabel.textContent = `${forceN.toFixed(2)} N`;
}

export function showDialog(refs: UiRefs, message: string): void {
  refs.dialogText.textContent = message;
  refs.dialog.classList.remove("hidden");
}
