/** Binary payload decoding: base64-wrapped little-endian arrays. */

function b64Bytes(b64: string): Uint8Array {
  const raw = atob(b64);
  const bytes = new Uint8Array(raw.length);
  for (let i = 0; i < raw.length; i++) bytes[i] = raw.charCodeAt(i);
  return bytes;
}

/** Decode explicitly as little-endian regardless of platform byte order. */
export function b64ToFloat32(b64: string): Float32Array {
  const bytes = b64Bytes(b64);
  if (bytes.length % 4 !== 0) {
    throw new Error(`float32 payload length ${bytes.length} is not a multiple of 4`);
  }
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  const out = new Float32Array(bytes.length / 4);
  for (let i = 0; i < out.length; i++) out[i] = view.getFloat32(i * 4, true);
  return out;
}

export function b64ToUint8(b64: string): Uint8Array {
  return b64Bytes(b64);
}

/** Row-major (q x n) accessor over a flat decoded array. */
export class Field {
  constructor(
    readonly data: Float32Array,
    readonly q: number,
    readonly n: number,
  ) {
    if (data.length !== q * n) {
      throw new Error(`field is ${data.length} values, expected ${q}x${n}`);
    }
  }

  at(row: number, col: number): number {
    return this.data[row * this.n + col];
  }
}
