/** Compact viridis approximation for [0, 1] values. */

const STOPS: [number, number, number][] = [
  [68, 1, 84],
  [71, 44, 122],
  [59, 81, 139],
  [44, 113, 142],
  [33, 144, 141],
  [39, 173, 129],
  [92, 200, 99],
  [170, 220, 50],
  [253, 231, 37],
];

export function viridis(value: number): [number, number, number] {
  const v = Math.min(1, Math.max(0, value));
  const pos = v * (STOPS.length - 1);
  const lo = Math.floor(pos);
  const hi = Math.min(lo + 1, STOPS.length - 1);
  const t = pos - lo;
  return [0, 1, 2].map((k) => Math.round(STOPS[lo][k] + t * (STOPS[hi][k] - STOPS[lo][k]))) as [
    number,
    number,
    number,
  ];
}

/** Distinct trace colors for up to ~26 signals. */
export function traceColor(index: number): string {
  const hue = (index * 137.508) % 360; // golden-angle spacing
  return `hsl(${hue.toFixed(1)}, 70%, 55%)`;
}
