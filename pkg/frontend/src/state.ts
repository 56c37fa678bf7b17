/** Dashboard view state: a pure reducer over SSE events and user actions.
 *
 * The rendered thresholds always mirror the engine's last acknowledged
 * values (carried on every graph event); slider moves stay pending until a
 * graph event confirms them. Only the latest payload per event type is
 * retained, plus coherence fields for pinned pairs, so a long session's
 * memory stays bounded.
 */

import type {
  CoherenceEvent,
  GraphEvent,
  SignalsEvent,
  SpectraEvent,
  TickEvent,
} from "./types.js";

export type Connection = "connecting" | "live" | "reconnecting" | "offline";

export interface Thresholds {
  on: number;
  off: number;
}

export interface ViewState {
  connection: Connection;
  lastTick: number | null;
  monotonicViolations: number;
  signals: SignalsEvent | null;
  spectra: SpectraEvent | null;
  graph: GraphEvent | null;
  /** latest coherence event regardless of pair */
  coherence: CoherenceEvent | null;
  /** latest per pinned pair, keyed "A|B"; evicted when unpinned */
  pinnedCoherence: Map<string, CoherenceEvent>;
  /** last server-acknowledged gating values (from graph events) */
  ackedThresholds: Thresholds | null;
  /** slider values sent but not yet confirmed by a graph event */
  pendingThresholds: Thresholds | null;
  pinnedPairs: [string, string][];
  paused: boolean;
  tickReport: TickEvent | null;
  eventCounts: Record<string, number>;
}

export function initialState(): ViewState {
  return {
    connection: "connecting",
    lastTick: null,
    monotonicViolations: 0,
    signals: null,
    spectra: null,
    graph: null,
    coherence: null,
    pinnedCoherence: new Map(),
    ackedThresholds: null,
    pendingThresholds: null,
    pinnedPairs: [],
    paused: false,
    tickReport: null,
    eventCounts: {},
  };
}

export type Action =
  | { type: "sse"; event: string; data: unknown }
  | { type: "connection"; status: Connection }
  | { type: "thresholds-sent"; on: number; off: number };

export function pairKey(a: string, b: string): string {
  return a < b ? `${a}|${b}` : `${b}|${a}`;
}

function close(a: number, b: number): boolean {
  return Math.abs(a - b) < 1e-9;
}

export function reduce(state: ViewState, action: Action): ViewState {
  switch (action.type) {
    case "connection": {
      const next = { ...state, connection: action.status };
      if (action.status === "connecting" || action.status === "reconnecting") {
        next.lastTick = null; // tick monotonicity is a per-connection contract
      }
      return next;
    }
    case "thresholds-sent":
      return { ...state, pendingThresholds: { on: action.on, off: action.off } };
    case "sse":
      return applyEvent(state, action.event, action.data);
  }
}

function applyEvent(state: ViewState, event: string, data: unknown): ViewState {
  const next: ViewState = {
    ...state,
    connection: "live",
    eventCounts: { ...state.eventCounts, [event]: (state.eventCounts[event] ?? 0) + 1 },
  };
  const payload = data as { tick?: number };
  if (typeof payload?.tick === "number") {
    if (state.lastTick !== null && payload.tick < state.lastTick) {
      next.monotonicViolations = state.monotonicViolations + 1;
    }
    next.lastTick = Math.max(state.lastTick ?? -1, payload.tick);
  }
  switch (event) {
    case "signals":
      next.signals = data as SignalsEvent;
      break;
    case "spectra":
      next.spectra = data as SpectraEvent;
      break;
    case "graph": {
      const g = data as GraphEvent;
      next.graph = g;
      next.paused = g.paused;
      next.ackedThresholds = { on: g.theta_on, off: g.theta_off };
      if (
        state.pendingThresholds &&
        close(g.theta_on, state.pendingThresholds.on) &&
        close(g.theta_off, state.pendingThresholds.off)
      ) {
        next.pendingThresholds = null; // acknowledged
      }
      next.pinnedPairs = g.pinned.map(([i, j]) => [g.nodes[i], g.nodes[j]]);
      const keep = new Set(next.pinnedPairs.map(([a, b]) => pairKey(a, b)));
      next.pinnedCoherence = new Map(
        [...state.pinnedCoherence].filter(([key]) => keep.has(key)),
      );
      break;
    }
    case "coherence": {
      const c = data as CoherenceEvent;
      next.coherence = c;
      const key = pairKey(c.pair[0], c.pair[1]);
      if (next.pinnedPairs.some(([a, b]) => pairKey(a, b) === key)) {
        const copy = new Map(next.pinnedCoherence);
        copy.set(key, c);
        next.pinnedCoherence = copy;
      }
      break;
    }
    case "tick":
      next.tickReport = data as TickEvent;
      break;
    default:
      break; // unknown event types are ignored, never fatal
  }
  return next;
}

/** Coherence panel lock: the first pinned pair wins until unpinned. */
export function displayedCoherence(state: ViewState): CoherenceEvent | null {
  if (state.pinnedPairs.length > 0) {
    const [a, b] = state.pinnedPairs[0];
    return state.pinnedCoherence.get(pairKey(a, b)) ?? null;
  }
  return state.coherence;
}

/** Thresholds the UI should render: always the last server-acked values. */
export function renderedThresholds(state: ViewState): Thresholds | null {
  return state.ackedThresholds;
}
