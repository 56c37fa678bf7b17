/** POST /control client; rejected commands surface their server message. */

import type { ControlAck } from "./types.js";

export class ControlError extends Error {
  constructor(message: string, readonly offline: boolean = false) {
    super(message);
  }
}

type FetchLike = (url: string, init: {
  method: string;
  headers: Record<string, string>;
  body: string;
}) => Promise<{ status: number; json(): Promise<unknown> }>;

export class ControlClient {
  constructor(
    private readonly baseUrl: string,
    private readonly fetchFn: FetchLike = (url, init) => fetch(url, init),
  ) {}

  async send(cmd: Record<string, unknown>): Promise<ControlAck> {
    let response;
    try {
      response = await this.fetchFn(`${this.baseUrl}/control`, {
        method: "POST",
        headers: { "Content-Type": "application/json" },
        body: JSON.stringify(cmd),
      });
    } catch {
      throw new ControlError("engine unreachable", true);
    }
    const body = (await response.json().catch(() => ({}))) as ControlAck;
    if (response.status !== 200 || !body.ok) {
      throw new ControlError(body.error ?? `control rejected (${response.status})`);
    }
    return body;
  }

  setThreshold(on: number, off: number): Promise<ControlAck> {
    return this.send({ cmd: "set_threshold", theta_on: on, theta_off: off });
  }

  pinPair(a: string, b: string): Promise<ControlAck> {
    return this.send({ cmd: "pin_pair", pair: [a, b] });
  }

  unpinPair(a: string, b: string): Promise<ControlAck> {
    return this.send({ cmd: "unpin_pair", pair: [a, b] });
  }

  setMode(mode: "magnitude" | "complex"): Promise<ControlAck> {
    return this.send({ cmd: "set_similarity_mode", mode });
  }

  pause(): Promise<ControlAck> {
    return this.send({ cmd: "pause" });
  }

  resume(): Promise<ControlAck> {
    return this.send({ cmd: "resume" });
  }
}
