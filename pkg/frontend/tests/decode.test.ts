import { describe, expect, it } from "vitest";

import { b64ToFloat32, b64ToUint8, Field } from "../src/decode.js";

function encodeF32LE(values: number[]): string {
  const buf = new ArrayBuffer(values.length * 4);
  const view = new DataView(buf);
  values.forEach((v, i) => view.setFloat32(i * 4, v, true));
  return Buffer.from(buf).toString("base64");
}

describe("b64ToFloat32", () => {
  it("round-trips little-endian float32 payloads", () => {
    const values = [0, 1, -1, 0.5, 3.25e-7, 1e20];
    const decoded = b64ToFloat32(encodeF32LE(values));
    expect(Array.from(decoded)).toEqual(values.map((v) => Math.fround(v)));
  });

  it("rejects lengths that are not multiples of four", () => {
    const bad = Buffer.from([1, 2, 3]).toString("base64");
    expect(() => b64ToFloat32(bad)).toThrow(/multiple of 4/);
  });

  it("decodes explicitly little-endian", () => {
    // 1.0f little-endian = 00 00 80 3F
    const b64 = Buffer.from([0x00, 0x00, 0x80, 0x3f]).toString("base64");
    expect(b64ToFloat32(b64)[0]).toBe(1.0);
  });
});

describe("b64ToUint8", () => {
  it("decodes boundary flags", () => {
    const b64 = Buffer.from([0, 1, 1, 0]).toString("base64");
    expect(Array.from(b64ToUint8(b64))).toEqual([0, 1, 1, 0]);
  });
});

describe("Field", () => {
  it("indexes row-major", () => {
    const field = new Field(new Float32Array([1, 2, 3, 4, 5, 6]), 2, 3);
    expect(field.at(0, 2)).toBe(3);
    expect(field.at(1, 0)).toBe(4);
  });

  it("rejects shape mismatches", () => {
    expect(() => new Field(new Float32Array(5), 2, 3)).toThrow(/expected 2x3/);
  });
});
