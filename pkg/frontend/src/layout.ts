/** Fixed circular node layout.
 *
 * Node 0 sits at 3 o'clock and indices advance counter-clockwise, matching
 * the engine's label order A, B, C, ... around the circle.
 */

export interface Point {
  x: number;
  y: number;
}

export function circularLayout(
  count: number,
  cx: number,
  cy: number,
  radius: number,
): Point[] {
  const points: Point[] = [];
  for (let i = 0; i < count; i++) {
    const angle = (2 * Math.PI * i) / count;
    // screen y grows downward, so subtracting sin makes the order CCW
    points.push({ x: cx + radius * Math.cos(angle), y: cy - radius * Math.sin(angle) });
  }
  return points;
}

/** Linear edge styling from a similarity weight in [0, 1]. */
export function edgeStyle(weight: number): { opacity: number; width: number } {
  const w = Math.min(1, Math.max(0, weight));
  return { opacity: w, width: 0.5 + 3.5 * w };
}
