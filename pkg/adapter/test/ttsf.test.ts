import { describe, expect, it } from "vitest";

import { decodeTtsf, encodeTtsf } from "../src/ttsf.js";

describe("ttsf binary format", () => {
  it("encodes the documented header layout", () => {
    const buf = encodeTtsf({ frames: 2, dims: 3, values: new Float32Array([1, 2, 3, 4, 5, 6]) });
    expect(buf.toString("ascii", 0, 4)).toBe("TTSF");
    expect(buf.readUInt32LE(4)).toBe(1); // format version
    expect(buf.readUInt32LE(8)).toBe(2);
    expect(buf.readUInt32LE(12)).toBe(3);
    expect(buf.length).toBe(16 + 4 * 6);
    expect(buf.readFloatLE(16)).toBe(1);
    expect(buf.readFloatLE(16 + 4 * 5)).toBe(6);
  });

  it("round-trips bit-exactly", () => {
    const values = new Float32Array([0.5, -1.25, 3.75e-3, 1e10, -0.0, 7]);
    const matrix = { frames: 3, dims: 2, values };
    const back = decodeTtsf(encodeTtsf(matrix));
    expect(back.frames).toBe(3);
    expect(back.dims).toBe(2);
    expect(Array.from(back.values)).toEqual(Array.from(values));
  });

  it("rejects malformed payloads", () => {
    expect(() => encodeTtsf({ frames: 0, dims: 1, values: new Float32Array(0) })).toThrow();
    expect(() =>
      encodeTtsf({ frames: 1, dims: 1, values: new Float32Array([Number.NaN]) })
    ).toThrow(/finite/);
    const good = encodeTtsf({ frames: 1, dims: 1, values: new Float32Array([1]) });
    expect(() => decodeTtsf(good.subarray(0, 10))).toThrow();
    const bad = Buffer.from(good);
    bad.write("NOPE", 0, "ascii");
    expect(() => decodeTtsf(bad)).toThrow(/magic/);
  });
});
