/** Coherence heatmap with phase arrows and boundary de-emphasis.
 *
 * Row 0 (highest frequency) renders at the top on a log frequency axis; the
 * engine's grid is log-uniform, so rows map to even pixel bands. Arrow angle
 * is the relative phase: 0 points right, +pi/2 points up.
 */

import { b64ToFloat32, b64ToUint8, Field } from "../decode.js";
import { viridis } from "../colormap.js";
import type { CoherenceEvent } from "../types.js";

export interface ArrowSegment {
  x1: number;
  y1: number;
  x2: number;
  y2: number;
}

export function arrowStride(q: number, n: number, maxArrows: number): { rows: number; cols: number } {
  const total = q * n;
  if (total <= maxArrows) return { rows: 1, cols: 1 };
  const factor = Math.sqrt(total / maxArrows);
  return {
    rows: Math.max(1, Math.round(factor)),
    cols: Math.max(1, Math.round(factor)),
  };
}

/** Pure arrow geometry in pixel space; length scales with cell size. */
export function arrowSegments(
  phase: Field,
  width: number,
  height: number,
  maxArrows = 400,
): ArrowSegment[] {
  const { q, n } = phase;
  const { rows, cols } = arrowStride(q, n, maxArrows);
  const cellW = width / n;
  const cellH = height / q;
  const len = Math.min(cellW * cols, cellH * rows) * 0.8;
  const out: ArrowSegment[] = [];
  for (let r = Math.floor(rows / 2); r < q; r += rows) {
    for (let c = Math.floor(cols / 2); c < n; c += cols) {
      const angle = phase.at(r, c);
      const cx = (c + 0.5) * cellW;
      const cy = (r + 0.5) * cellH;
      out.push({
        x1: cx - (len / 2) * Math.cos(angle),
        y1: cy + (len / 2) * Math.sin(angle), // y grows downward
        x2: cx + (len / 2) * Math.cos(angle),
        y2: cy - (len / 2) * Math.sin(angle),
      });
    }
  }
  return out;
}

export interface DecodedCoherence {
  coherence: Field;
  phase: Field;
  boundary: Uint8Array;
}

export function decodeCoherence(ev: CoherenceEvent): DecodedCoherence {
  const coherence = new Field(b64ToFloat32(ev.coherence_b64), ev.q, ev.n);
  const phase = new Field(b64ToFloat32(ev.phase_b64), ev.q, ev.n);
  const boundary = b64ToUint8(ev.boundary_b64);
  if (boundary.length !== ev.n) {
    throw new Error(`boundary flags are ${boundary.length} columns, expected ${ev.n}`);
  }
  return { coherence, phase, boundary };
}

export function drawCoherence(
  canvas: HTMLCanvasElement,
  ev: CoherenceEvent | null,
  banner: (text: string) => void,
): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (!ev) {
    ctx.fillStyle = "#666";
    ctx.fillText("waiting for coherence...", 12, 20);
    return;
  }
  let decoded: DecodedCoherence;
  try {
    decoded = decodeCoherence(ev);
  } catch (err) {
    // a malformed payload renders an error tile, never crashes the panel
    console.error("coherence payload rejected:", err);
    ctx.fillStyle = "#402";
    ctx.fillRect(0, 0, width, height);
    ctx.fillStyle = "#f88";
    ctx.fillText(`coherence payload error: ${String(err)}`, 12, 20);
    return;
  }
  const { coherence, phase, boundary } = decoded;
  const image = ctx.createImageData(width, height);
  for (let py = 0; py < height; py++) {
    const row = Math.min(coherence.q - 1, Math.floor((py / height) * coherence.q));
    for (let px = 0; px < width; px++) {
      const col = Math.min(coherence.n - 1, Math.floor((px / width) * coherence.n));
      const [r, g, b] = viridis(coherence.at(row, col));
      const dim = boundary[col] ? 0.45 : 1.0;
      const k = (py * width + px) * 4;
      image.data[k] = Math.round(r * dim);
      image.data[k + 1] = Math.round(g * dim);
      image.data[k + 2] = Math.round(b * dim);
      image.data[k + 3] = 255;
    }
  }
  ctx.putImageData(image, 0, 0);
  ctx.strokeStyle = "rgba(255,255,255,0.85)";
  ctx.lineWidth = 1;
  for (const seg of arrowSegments(phase, width, height)) {
    ctx.beginPath();
    ctx.moveTo(seg.x1, seg.y1);
    ctx.lineTo(seg.x2, seg.y2);
    ctx.stroke();
    const angle = Math.atan2(seg.y2 - seg.y1, seg.x2 - seg.x1);
    ctx.beginPath();
    ctx.moveTo(seg.x2, seg.y2);
    ctx.lineTo(
      seg.x2 - 3 * Math.cos(angle - 0.5),
      seg.y2 - 3 * Math.sin(angle - 0.5),
    );
    ctx.moveTo(seg.x2, seg.y2);
    ctx.lineTo(
      seg.x2 - 3 * Math.cos(angle + 0.5),
      seg.y2 - 3 * Math.sin(angle + 0.5),
    );
    ctx.stroke();
  }
  const hiF = ev.frequencies_hz[0];
  const loF = ev.frequencies_hz[ev.frequencies_hz.length - 1];
  banner(
    `${ev.pair[0]}-${ev.pair[1]}  ${loF.toFixed(2)}-${hiF.toFixed(1)} Hz  ` +
      `tick ${ev.tick}${ev.attached ? "" : " (pinned, not admitted)"}`,
  );
}
