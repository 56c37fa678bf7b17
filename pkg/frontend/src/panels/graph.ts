/** Two-layer relationship graph on a fixed circular layout.
 *
 * Complete similarity layer in gray (wider and darker with weight); gated
 * pairs overlaid in orange; pinned pairs highlighted.
 */

import { circularLayout, edgeStyle } from "../layout.js";
import type { GraphEvent } from "../types.js";

export function drawGraph(canvas: HTMLCanvasElement, ev: GraphEvent | null): void {
  const ctx = canvas.getContext("2d");
  if (!ctx) return;
  const { width, height } = canvas;
  ctx.clearRect(0, 0, width, height);
  if (!ev) {
    ctx.fillStyle = "#666";
    ctx.fillText("waiting for graph...", 12, 20);
    return;
  }
  const n = ev.nodes.length;
  const radius = Math.min(width, height) * 0.38;
  const pts = circularLayout(n, width / 2, height / 2, radius);

  for (const [i, j, w] of ev.layer1) {
    const { opacity, width: lw } = edgeStyle(w);
    ctx.strokeStyle = `rgba(110, 110, 110, ${opacity.toFixed(3)})`;
    ctx.lineWidth = lw;
    ctx.beginPath();
    ctx.moveTo(pts[i].x, pts[i].y);
    ctx.lineTo(pts[j].x, pts[j].y);
    ctx.stroke();
  }
  const pinned = new Set(ev.pinned.map(([i, j]) => `${i}|${j}`));
  for (const [i, j, ema] of ev.layer2) {
    ctx.strokeStyle = pinned.has(`${i}|${j}`) ? "#ff3366" : "#ff9933";
    ctx.lineWidth = 1.5 + 2.5 * ema;
    ctx.beginPath();
    ctx.moveTo(pts[i].x + 3, pts[i].y + 3);
    ctx.lineTo(pts[j].x + 3, pts[j].y + 3);
    ctx.stroke();
  }
  pts.forEach((p, i) => {
    ctx.fillStyle = "#2b6cb0";
    ctx.beginPath();
    ctx.arc(p.x, p.y, 13, 0, 2 * Math.PI);
    ctx.fill();
    ctx.fillStyle = "#fff";
    ctx.textAlign = "center";
    ctx.textBaseline = "middle";
    ctx.fillText(ev.nodes[i], p.x, p.y);
  });
  ctx.textAlign = "left";
  ctx.textBaseline = "alphabetic";
  ctx.fillStyle = "#999";
  ctx.fillText(
    `gated ${ev.layer2.length} / ${ev.layer1.length}  on=${ev.theta_on}  off=${ev.theta_off}`,
    6,
    12,
  );
}
