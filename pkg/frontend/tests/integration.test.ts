/** End-to-end against a live engine: spawn the Python process, consume real
 * SSE frames, and steer it through /control. Exercises the same wire format
 * the browser client sees.
 */

import { spawn, type ChildProcess } from "node:child_process";
import { afterAll, beforeAll, describe, expect, it } from "vitest";

import type { CoherenceEvent, GraphEvent } from "../src/types.js";

let child: ChildProcess | null = null;
let base = "";

type RawEvent = { name: string; data: unknown };

async function* sseFrames(url: string, signal: AbortSignal): AsyncGenerator<RawEvent> {
  const response = await fetch(url, { signal });
  if (!response.ok || !response.body) throw new Error(`SSE connect failed: ${response.status}`);
  const reader = response.body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  while (true) {
    const { done, value } = await reader.read();
    if (done) return;
    buffer += decoder.decode(value, { stream: true });
    let cut;
    while ((cut = buffer.indexOf("\n\n")) >= 0) {
      const frame = buffer.slice(0, cut);
      buffer = buffer.slice(cut + 2);
      let name = "";
      let data = "";
      for (const line of frame.split("\n")) {
        if (line.startsWith("event: ")) name = line.slice(7);
        else if (line.startsWith("data: ")) data = line.slice(6);
      }
      if (name && data) yield { name, data: JSON.parse(data) };
    }
  }
}

async function collect(
  wanted: (ev: RawEvent) => boolean,
  timeoutMs: number,
  stopAfter: number = 1,
): Promise<RawEvent[]> {
  const controller = new AbortController();
  const timer = setTimeout(() => controller.abort(), timeoutMs);
  const hits: RawEvent[] = [];
  try {
    for await (const ev of sseFrames(`${base}/events`, controller.signal)) {
      if (wanted(ev)) {
        hits.push(ev);
        if (hits.length >= stopAfter) break;
      }
    }
  } catch (err) {
    if (!controller.signal.aborted) throw err;
  } finally {
    clearTimeout(timer);
    controller.abort();
  }
  return hits;
}

beforeAll(async () => {
  child = spawn(
    "python3",
    [
      "-u", "-m", "wavemux.cli", "demo",
      "--m", "4", "--n", "64", "--q", "8",
      "--tick-ms", "5", "--seed", "12",
      "--theta-on", "0.6", "--theta-off", "0.5",
      "--interval", "10", "--port", "0",
    ],
    { stdio: ["ignore", "pipe", "pipe"] },
  );
  base = await new Promise<string>((resolve, reject) => {
    const onData = (chunk: Buffer) => {
      const match = chunk.toString().match(/serving events at (http:\/\/[^/]+)\/events/);
      if (match) resolve(match[1]);
    };
    child!.stdout!.on("data", onData);
    child!.on("exit", (code) => reject(new Error(`engine exited early (${code})`)));
    setTimeout(() => reject(new Error("engine did not announce its URL")), 15_000);
  });
  // wait for warm-up so panels have data to show
  const deadline = Date.now() + 15_000;
  while (Date.now() < deadline) {
    const health = (await (await fetch(`${base}/healthz`)).json()) as { warm: boolean };
    if (health.warm) return;
    await new Promise((r) => setTimeout(r, 50));
  }
  throw new Error("engine never warmed up");
}, 40_000);

afterAll(() => {
  child?.kill("SIGKILL");
});

describe("live engine", () => {
  it("delivers all four panel feeds within 2 s of connect", async () => {
    const t0 = Date.now();
    const seen = new Set<string>();
    await collect((ev) => {
      seen.add(ev.name);
      return ["signals", "spectra", "graph", "coherence", "tick"].every(
        (n) => seen.has(n) || n === "coherence",
      );
    }, 5_000);
    expect(Date.now() - t0).toBeLessThan(2_000);
    expect(seen.has("signals") && seen.has("spectra") && seen.has("graph")).toBe(true);
  });

  it("threshold changes alter the admitted edge count on later graph events", async () => {
    const [before] = await collect((ev) => ev.name === "graph", 5_000);
    const beforeCount = (before.data as GraphEvent).layer2.length;
    const response = await fetch(`${base}/control`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ cmd: "set_threshold", theta_on: 0.01, theta_off: 0.0 }),
    });
    expect(response.status).toBe(200);
    const opened = await collect((ev) => {
      if (ev.name !== "graph") return false;
      const g = ev.data as GraphEvent;
      return g.theta_on === 0.01 && g.layer2.length === 6; // all 4C2 pairs admitted
    }, 5_000);
    expect(opened.length).toBe(1);
    expect(beforeCount).toBeLessThan(6);
    // restore for the remaining tests
    await fetch(`${base}/control`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ cmd: "set_threshold", theta_on: 0.6, theta_off: 0.5 }),
    });
  });

  it("pinning a pair locks coherence production onto it", async () => {
    const response = await fetch(`${base}/control`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ cmd: "pin_pair", pair: ["A", "C"] }),
    });
    expect(response.status).toBe(200);
    const hits = await collect(
      (ev) => ev.name === "coherence" &&
        JSON.stringify((ev.data as CoherenceEvent).pair) === '["A","C"]',
      10_000,
      2,
    );
    expect(hits.length).toBe(2);
    await fetch(`${base}/control`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ cmd: "unpin_pair", pair: ["A", "C"] }),
    });
  });

  it("rejects invalid control commands with a message", async () => {
    const response = await fetch(`${base}/control`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ cmd: "pin_pair", pair: ["A", "Z"] }),
    });
    expect(response.status).toBe(400);
    const body = (await response.json()) as { ok: boolean; error: string };
    expect(body.ok).toBe(false);
    expect(body.error).toMatch(/unknown pair/i);
  });

  it("serves a parseable binary snapshot", async () => {
    const response = await fetch(`${base}/snapshot`);
    expect(response.status).toBe(200);
    const bytes = new Uint8Array(await response.arrayBuffer());
    expect(String.fromCharCode(...bytes.slice(0, 4))).toBe("CMX1");
  });
});
