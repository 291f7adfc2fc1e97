// Binary feature matrix format shared with the main toolkit:
// magic "TTSF", version, frames, dims as little-endian uint32, then a
// row-major float32 little-endian payload.

import { promises as fs } from "node:fs";

export const TTSF_MAGIC = "TTSF";
export const TTSF_VERSION = 1;
const HEADER_BYTES = 16;

export interface FeatureMatrix {
  frames: number;
  dims: number;
  /** Row-major values, length frames * dims. */
  values: Float32Array;
}

export function encodeTtsf(matrix: FeatureMatrix): Buffer {
  const { frames, dims, values } = matrix;
  if (frames < 1 || dims < 1) {
    throw new Error(`feature matrix must be at least 1x1, got ${frames}x${dims}`);
  }
  if (values.length !== frames * dims) {
    throw new Error(
      `payload length ${values.length} does not match ${frames}x${dims}`
    );
  }
  for (const v of values) {
    if (!Number.isFinite(v)) throw new Error("feature values must be finite");
  }
  const buf = Buffer.alloc(HEADER_BYTES + 4 * values.length);
  buf.write(TTSF_MAGIC, 0, "ascii");
  buf.writeUInt32LE(TTSF_VERSION, 4);
  buf.writeUInt32LE(frames, 8);
  buf.writeUInt32LE(dims, 12);
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  for (let i = 0; i < values.length; i++) {
    view.setFloat32(4 * i, values[i], true);
  }
  return buf;
}

export function decodeTtsf(buf: Buffer): FeatureMatrix {
  if (buf.length < HEADER_BYTES) throw new Error("truncated header");
  if (buf.toString("ascii", 0, 4) !== TTSF_MAGIC) throw new Error("bad magic");
  const version = buf.readUInt32LE(4);
  if (version !== TTSF_VERSION) throw new Error(`unsupported version ${version}`);
  const frames = buf.readUInt32LE(8);
  const dims = buf.readUInt32LE(12);
  if (buf.length !== HEADER_BYTES + 4 * frames * dims) {
    throw new Error("payload length mismatch");
  }
  const values = new Float32Array(frames * dims);
  const view = new DataView(buf.buffer, buf.byteOffset + HEADER_BYTES);
  for (let i = 0; i < values.length; i++) {
    values[i] = view.getFloat32(4 * i, true);
  }
  return { frames, dims, values };
}

export async function writeTtsf(path: string, matrix: FeatureMatrix): Promise<void> {
  await fs.writeFile(path, encodeTtsf(matrix));
}

export async function readTtsf(path: string): Promise<FeatureMatrix> {
  return decodeTtsf(await fs.readFile(path));
}
