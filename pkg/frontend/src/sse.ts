/** SSE subscription with reconnect-on-drop and a visible status callback.
 *
 * The EventSource factory is injectable so the client logic is testable
 * without a browser. A stall or error never fails silently: every
 * transition is reported through onStatus.
 */

import { backoffDelay } from "./backoff.js";
import { EVENT_NAMES } from "./types.js";
import type { Connection } from "./state.js";

export interface EventSourceLike {
  addEventListener(name: string, handler: (ev: { data: string }) => void): void;
  close(): void;
  onerror: ((ev: unknown) => void) | null;
  onopen: ((ev: unknown) => void) | null;
}

export type EventSourceFactory = (url: string) => EventSourceLike;

export interface SseClientOptions {
  url: string;
  onEvent: (name: string, data: unknown) => void;
  onStatus: (status: Connection) => void;
  esFactory?: EventSourceFactory;
  setTimer?: (fn: () => void, ms: number) => unknown;
}

export class SseClient {
  private source: EventSourceLike | null = null;
  private attempt = 0;
  private closed = false;

  constructor(private readonly options: SseClientOptions) {}

  connect(): void {
    if (this.closed) return;
    const factory =
      this.options.esFactory ??
      ((url: string) => new EventSource(url) as unknown as EventSourceLike);
    this.options.onStatus(this.attempt === 0 ? "connecting" : "reconnecting");
    const source = factory(this.options.url);
    this.source = source;
    source.onopen = () => {
      this.attempt = 0;
    };
    source.onerror = () => {
      if (this.closed) return;
      source.close();
      if (this.source !== source) return; // stale callback after replacement
      this.source = null;
      const delay = backoffDelay(this.attempt);
      this.attempt += 1;
      this.options.onStatus("reconnecting");
      const setTimer = this.options.setTimer ?? ((fn, ms) => setTimeout(fn, ms));
      setTimer(() => this.connect(), delay);
    };
    for (const name of EVENT_NAMES) {
      source.addEventListener(name, (ev) => {
        let parsed: unknown;
        try {
          parsed = JSON.parse(ev.data);
        } catch (err) {
          console.error(`bad ${name} payload`, err);
          return;
        }
        this.options.onEvent(name, parsed);
      });
    }
  }

  close(): void {
    this.closed = true;
    this.source?.close();
    this.source = null;
    this.options.onStatus("offline");
  }
}
