/** Per-signal magnitude spectra, overlaid. */

import { traceColor } from "../colormap.js";
import type { SpectraEvent } from "../types.js";

export function drawSpectra(canvas: HTMLCanvasElement, ev: SpectraEvent | null): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (!ev) {
    ctx.fillStyle = "#666";
    ctx.fillText("waiting for spectra...", 12, 20);
    return;
  }
  let peak = 1e-12;
  for (const row of ev.magnitudes) {
    for (const v of row) peak = Math.max(peak, v);
  }
  const bins = ev.magnitudes[0]?.length ?? 0;
  ev.magnitudes.forEach((row, i) => {
    ctx.strokeStyle = traceColor(i);
    ctx.lineWidth = 1;
    ctx.beginPath();
    row.forEach((v, k) => {
      const x = (k / Math.max(1, bins - 1)) * width;
      const y = height - (v / peak) * (height - 14) - 2;
      if (k === 0) ctx.moveTo(x, y);
      else ctx.lineTo(x, y);
    });
    ctx.stroke();
  });
  ctx.fillStyle = "#999";
  const fmax = ev.freq_hz[ev.freq_hz.length - 1] ?? 0;
  ctx.fillText(`0 .. ${fmax.toFixed(1)} Hz, peak ${peak.toFixed(2)}`, 6, 12);
}
