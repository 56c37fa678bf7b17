/** Rolling multi-trace view of the signal windows. */

import { traceColor } from "../colormap.js";
import type { SignalsEvent } from "../types.js";

/** Per-pixel min/max decimation so dense windows stay one draw call. */
export function minMaxDecimate(values: number[], buckets: number): [number, number][] {
  if (values.length === 0 || buckets <= 0) return [];
  const out: [number, number][] = [];
  const per = values.length / buckets;
  for (let b = 0; b < buckets; b++) {
    const lo = Math.floor(b * per);
    const hi = Math.max(lo + 1, Math.floor((b + 1) * per));
    let mn = Infinity;
    let mx = -Infinity;
    for (let i = lo; i < hi && i < values.length; i++) {
      if (values[i] < mn) mn = values[i];
      if (values[i] > mx) mx = values[i];
    }
    out.push([mn, mx]);
  }
  return out;
}

export function drawSignals(canvas: HTMLCanvasElement, ev: SignalsEvent | null): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (!ev) {
    ctx.fillStyle = "#666";
    ctx.fillText("waiting for signals...", 12, 20);
    return;
  }
  const flat = ev.window.flat();
  let span = 1;
  for (const v of flat) span = Math.max(span, Math.abs(v));
  const rows = ev.window.length;
  const laneH = height / rows;
  ev.window.forEach((trace, i) => {
    const mid = laneH * (i + 0.5);
    const scale = (laneH * 0.45) / span;
    ctx.strokeStyle = traceColor(i);
    ctx.lineWidth = 1;
    ctx.beginPath();
    const buckets = Math.min(trace.length, width);
    minMaxDecimate(trace, buckets).forEach(([mn, mx], b) => {
      const x = (b / buckets) * width;
      ctx.moveTo(x, mid - mn * scale);
      ctx.lineTo(x, mid - mx * scale - 0.5);
    });
    ctx.stroke();
    ctx.fillStyle = traceColor(i);
    const stale = ev.staleness[i] > 0 ? ` (stale ${ev.staleness[i]})` : "";
    ctx.fillText(`${ev.labels[i]}${stale}`, 6, mid - laneH * 0.3);
  });
}
