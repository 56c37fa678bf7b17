/** Wire payloads of the engine's server-sent events. */

export interface SignalsEvent {
  tick: number;
  labels: string[];
  stride: number;
  window: number[][];
  staleness: number[];
}

export interface SpectraEvent {
  tick: number;
  labels: string[];
  freq_hz: number[];
  magnitudes: number[][];
}

/** layer1 rows: [i, j, weight]; layer2 rows: [i, j, ema, lastCoherenceTick|-1]. */
export interface GraphEvent {
  tick: number;
  nodes: string[];
  theta_on: number;
  theta_off: number;
  alpha: number;
  mode: string;
  paused: boolean;
  pinned: [number, number][];
  layer1: [number, number, number][];
  layer2: [number, number, number, number][];
  admitted: [number, number][];
  evicted: [number, number][];
}

export interface CoherenceEvent {
  tick: number;
  computed_at: number;
  pair: [string, string];
  attached: boolean;
  q: number;
  n: number;
  frequencies_hz: number[];
  scales: number[];
  coherence_b64: string;
  phase_b64: string;
  boundary_b64: string;
  band_mean: number[];
  underflow_cells: number;
}

export interface TickEvent {
  tick: number;
  warm: boolean;
  timings_us: Record<string, number>;
  deadline_missed: boolean;
  anomalies: Record<string, number>;
}

export type EventName = "signals" | "spectra" | "graph" | "coherence" | "tick";

export const EVENT_NAMES: EventName[] = ["signals", "spectra", "graph", "coherence", "tick"];

export interface ControlAck {
  ok: boolean;
  cmd?: string;
  effective_next_tick?: number;
  error?: string;
}
