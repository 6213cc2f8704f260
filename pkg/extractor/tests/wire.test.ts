import * as fs from "node:fs";
import * as os from "node:os";
import * as path from "node:path";
import { beforeAll, describe, expect, it } from "vitest";

import {
  decodeCorrespondenceSet,
  decodeDescriptorSet,
  encodeCorrespondenceSet,
  encodeDescriptorSet,
  WireFormatError,
} from "../src/wire.js";
import { mulberry32, pythonReadback } from "./fixtures.js";

let tmp: string;
beforeAll(() => {
  tmp = fs.mkdtempSync(path.join(os.tmpdir(), "wire-"));
});

function sampleDescriptors(count: number, dimension: number, seed: number) {
  const rand = mulberry32(seed);
  const data = new Float32Array(count * dimension);
  for (let i = 0; i < data.length; i++) data[i] = rand() * 2 - 1;
  return {
    subset: "A" as const,
    methodTag: "testmethod",
    imageIds: Array.from({ length: count }, (_, i) => `img_${String(i).padStart(3, "0")}`),
    data,
    dimension,
  };
}

describe("descriptor files", () => {
  it("round-trips through encode and decode", () => {
    const dset = sampleDescriptors(5, 32, 1);
    const decoded = decodeDescriptorSet(encodeDescriptorSet(dset));
    expect(decoded.subset).toBe("A");
    expect(decoded.methodTag).toBe("testmethod");
    expect(decoded.imageIds).toEqual(dset.imageIds);
    expect(decoded.dimension).toBe(32);
    expect(Array.from(decoded.data)).toEqual(Array.from(dset.data));
  });

  it("rejects trailing bytes", () => {
    const buf = encodeDescriptorSet(sampleDescriptors(2, 8, 2));
    const padded = Buffer.concat([buf, Buffer.from([0])]);
    expect(() => decodeDescriptorSet(padded)).toThrow(WireFormatError);
    expect(() => decodeDescriptorSet(padded)).toThrow(/trailing bytes/);
  });

  it("rejects truncation and non-finite values", () => {
    const buf = encodeDescriptorSet(sampleDescriptors(2, 8, 3));
    expect(() => decodeDescriptorSet(buf.subarray(0, buf.length - 3))).toThrow(
      /ended inside/,
    );
    const bad = sampleDescriptors(1, 4, 4);
    bad.data[2] = Number.NaN;
    expect(() => encodeDescriptorSet(bad)).toThrow(/non-finite/);
  });

  it("is parsed identically by the evaluation harness", () => {
    const dset = sampleDescriptors(3, 16, 5);
    const filePath = path.join(tmp, "sample_A.vprd");
    fs.writeFileSync(filePath, encodeDescriptorSet(dset));
    const seen = pythonReadback("descriptor", filePath);
    expect(seen.subset).toBe("A");
    expect(seen.method_tag).toBe("testmethod");
    expect(seen.image_ids).toEqual(dset.imageIds);
    expect(seen.count).toBe(3);
    expect(seen.dimension).toBe(16);
    // float32 values survive the crossing bit-exactly.
    expect(seen.row0_head).toEqual(Array.from(dset.data.subarray(0, 4)));
  });
});

describe("correspondence files", () => {
  const points = Float32Array.from([
    10.5, 20.25, 30.125, 40.0,
    11.0, 21.0, 31.0, 41.0,
  ]);

  it("round-trips through encode and decode", () => {
    const decoded = decodeCorrespondenceSet(
      encodeCorrespondenceSet({ imageIdA: "left", imageIdB: "right", points }),
    );
    expect(decoded.imageIdA).toBe("left");
    expect(decoded.imageIdB).toBe("right");
    expect(Array.from(decoded.points)).toEqual(Array.from(points));
  });

  it("refuses duplicate rows before they reach disk", () => {
    const dup = Float32Array.from([1, 2, 3, 4, 1, 2, 3, 4]);
    expect(() =>
      encodeCorrespondenceSet({ imageIdA: "a", imageIdB: "b", points: dup }),
    ).toThrow(/duplicate/);
  });

  it("supports empty match sets", () => {
    const empty = encodeCorrespondenceSet({
      imageIdA: "a",
      imageIdB: "b",
      points: new Float32Array(0),
    });
    const decoded = decodeCorrespondenceSet(empty);
    expect(decoded.points.length).toBe(0);
  });

  it("is parsed identically by the evaluation harness", () => {
    const filePath = path.join(tmp, "pair.vprc");
    fs.writeFileSync(
      filePath,
      encodeCorrespondenceSet({ imageIdA: "a 1", imageIdB: "b/2", points }),
    );
    const seen = pythonReadback("correspondence", filePath);
    expect(seen.image_id_a).toBe("a 1");
    expect(seen.image_id_b).toBe("b/2");
    expect(seen.rows).toBe(2);
    expect(seen.row0).toEqual([10.5, 20.25, 30.125, 40.0]);
  });
});
