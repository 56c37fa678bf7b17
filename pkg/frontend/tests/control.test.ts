import { describe, expect, it } from "vitest";

import { ControlClient, ControlError } from "../src/control.js";

function fakeFetch(status: number, body: unknown) {
  const calls: { url: string; body: string }[] = [];
  const fn = async (url: string, init: { body: string }) => {
    calls.push({ url, body: init.body });
    return { status, json: async () => body };
  };
  return { fn, calls };
}

describe("ControlClient", () => {
  it("posts commands and returns the ack", async () => {
    const { fn, calls } = fakeFetch(200, { ok: true, cmd: "set_threshold" });
    const client = new ControlClient("http://e", fn);
    const ack = await client.setThreshold(0.95, 0.85);
    expect(ack.ok).toBe(true);
    expect(calls[0].url).toBe("http://e/control");
    expect(JSON.parse(calls[0].body)).toEqual({
      cmd: "set_threshold",
      theta_on: 0.95,
      theta_off: 0.85,
    });
  });

  it("surfaces the server's validation message", async () => {
    const { fn } = fakeFetch(400, { ok: false, error: "need 0 <= theta_off <= theta_on" });
    const client = new ControlClient("http://e", fn);
    await expect(client.setThreshold(0.5, 0.9)).rejects.toThrow(/theta_off/);
  });

  it("flags an unreachable engine as offline", async () => {
    const client = new ControlClient("http://e", async () => {
      throw new Error("ECONNREFUSED");
    });
    const err = await client.pause().catch((e) => e);
    expect(err).toBeInstanceOf(ControlError);
    expect((err as ControlError).offline).toBe(true);
  });

  it("builds every command verb", async () => {
    const { fn, calls } = fakeFetch(200, { ok: true });
    const client = new ControlClient("http://e", fn);
    await client.pinPair("A", "E");
    await client.unpinPair("A", "E");
    await client.pause();
    await client.resume();
    await client.setMode("complex");
    const verbs = calls.map((c) => JSON.parse(c.body).cmd);
    expect(verbs).toEqual(["pin_pair", "unpin_pair", "pause", "resume", "set_similarity_mode"]);
  });
});
