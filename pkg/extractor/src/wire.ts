/**
 * Binary descriptor (.vprd) and correspondence (.vprc) files.
 *
 * Both formats are little-endian with u16-length-prefixed UTF-8 strings
 * and float32 payloads, and must stay byte-compatible with the readers
 * in the evaluation harness: the harness is the consumer of everything
 * this package writes. Readers live here too so tests can round-trip
 * without crossing the language boundary.
 */

const DESCRIPTOR_MAGIC = Buffer.from("VPRD", "ascii");
const CORRESPONDENCE_MAGIC = Buffer.from("VPRC", "ascii");
const FORMAT_VERSION = 1;
const MAX_STRING = 0xffff;

export class WireFormatError extends Error {}

export interface DescriptorSet {
  subset: "A" | "B";
  methodTag: string;
  imageIds: string[];
  /** Row-major count x dimension matrix. */
  data: Float32Array;
  dimension: number;
}

export interface CorrespondenceSet {
  imageIdA: string;
  imageIdB: string;
  /** Row-major M x 4 rows of (x_a, y_a, x_b, y_b) pixels. */
  points: Float32Array;
}

function packString(value: string): Buffer {
  const raw = Buffer.from(value, "utf-8");
  if (raw.length > MAX_STRING) {
    throw new WireFormatError(
      `string of ${raw.length} bytes exceeds the u16 length prefix`,
    );
  }
  const out = Buffer.alloc(2 + raw.length);
  out.writeUInt16LE(raw.length, 0);
  raw.copy(out, 2);
  return out;
}

function u16(value: number): Buffer {
  const b = Buffer.alloc(2);
  b.writeUInt16LE(value, 0);
  return b;
}

function u32(value: number): Buffer {
  const b = Buffer.alloc(4);
  b.writeUInt32LE(value, 0);
  return b;
}

/** Little-endian float32 payload regardless of the host byte order. */
function floatPayload(data: Float32Array): Buffer {
  const out = Buffer.alloc(data.length * 4);
  for (let i = 0; i < data.length; i++) {
    out.writeFloatLE(data[i], i * 4);
  }
  return out;
}

function checkFinite(data: Float32Array, what: string): void {
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      throw new WireFormatError(`${what} contains a non-finite value at ${i}`);
    }
  }
}

export function encodeDescriptorSet(dset: DescriptorSet): Buffer {
  const count = dset.imageIds.length;
  if (dset.subset !== "A" && dset.subset !== "B") {
    throw new WireFormatError(`subset must be 'A' or 'B', got '${dset.subset}'`);
  }
  if (dset.data.length !== count * dset.dimension) {
    throw new WireFormatError(
      `descriptor matrix has ${dset.data.length} values, ` +
        `expected ${count} x ${dset.dimension}`,
    );
  }
  checkFinite(dset.data, "descriptor data");
  const parts: Buffer[] = [
    DESCRIPTOR_MAGIC,
    u16(FORMAT_VERSION),
    packString(dset.methodTag),
    Buffer.from(dset.subset, "ascii"),
    u32(count),
    u32(dset.dimension),
  ];
  for (const id of dset.imageIds) {
    parts.push(packString(id));
  }
  parts.push(floatPayload(dset.data));
  return Buffer.concat(parts);
}

export function encodeCorrespondenceSet(cset: CorrespondenceSet): Buffer {
  if (cset.points.length % 4 !== 0) {
    throw new WireFormatError(
      `correspondence payload must be M x 4, got ${cset.points.length} values`,
    );
  }
  checkFinite(cset.points, "correspondence points");
  const rows = cset.points.length / 4;
  // The harness refuses files with repeated rows, so duplicates are a
  // writer bug; fail loudly here instead of producing a rejected file.
  const seen = new Set<string>();
  for (let r = 0; r < rows; r++) {
    const key = Array.from(cset.points.subarray(r * 4, r * 4 + 4)).join(",");
    if (seen.has(key)) {
      throw new WireFormatError(`duplicate correspondence row ${key}`);
    }
    seen.add(key);
  }
  return Buffer.concat([
    CORRESPONDENCE_MAGIC,
    u16(FORMAT_VERSION),
    packString(cset.imageIdA),
    packString(cset.imageIdB),
    u32(rows),
    floatPayload(cset.points),
  ]);
}

class Cursor {
  private offset = 0;
  constructor(
    private readonly buf: Buffer,
    private readonly name: string,
  ) {}

  exact(n: number, what: string): Buffer {
    if (this.offset + n > this.buf.length) {
      throw new WireFormatError(`${this.name}: file ended inside ${what}`);
    }
    const chunk = this.buf.subarray(this.offset, this.offset + n);
    this.offset += n;
    return chunk;
  }

  u16(what: string): number {
    return this.exact(2, what).readUInt16LE(0);
  }

  u32(what: string): number {
    return this.exact(4, what).readUInt32LE(0);
  }

  string(what: string): string {
    const length = this.u16(`${what} length`);
    return this.exact(length, what).toString("utf-8");
  }

  expectEof(): void {
    if (this.offset !== this.buf.length) {
      throw new WireFormatError(`${this.name}: trailing bytes after the payload`);
    }
  }
}

function floatsFrom(chunk: Buffer, count: number): Float32Array {
  const out = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    out[i] = chunk.readFloatLE(i * 4);
  }
  return out;
}

export function decodeDescriptorSet(buf: Buffer, name = "<buffer>"): DescriptorSet {
  const r = new Cursor(buf, name);
  if (!r.exact(4, "magic").equals(DESCRIPTOR_MAGIC)) {
    throw new WireFormatError(`${name}: bad descriptor magic`);
  }
  const version = r.u16("version");
  if (version !== FORMAT_VERSION) {
    throw new WireFormatError(`${name}: unsupported version ${version}`);
  }
  const methodTag = r.string("method_tag");
  const subset = r.exact(1, "subset byte").toString("ascii");
  if (subset !== "A" && subset !== "B") {
    throw new WireFormatError(`${name}: subset byte must be 'A' or 'B'`);
  }
  const count = r.u32("count");
  const dimension = r.u32("dimension");
  const imageIds: string[] = [];
  for (let i = 0; i < count; i++) {
    imageIds.push(r.string(`image id ${i}`));
  }
  const data = floatsFrom(r.exact(count * dimension * 4, "descriptor matrix"), count * dimension);
  r.expectEof();
  return { subset, methodTag, imageIds, data, dimension };
}

export function decodeCorrespondenceSet(buf: Buffer, name = "<buffer>"): CorrespondenceSet {
  const r = new Cursor(buf, name);
  if (!r.exact(4, "magic").equals(CORRESPONDENCE_MAGIC)) {
    throw new WireFormatError(`${name}: bad correspondence magic`);
  }
  const version = r.u16("version");
  if (version !== FORMAT_VERSION) {
    throw new WireFormatError(`${name}: unsupported version ${version}`);
  }
  const imageIdA = r.string("image_id_a");
  const imageIdB = r.string("image_id_b");
  const rows = r.u32("row count");
  const points = floatsFrom(r.exact(rows * 16, "correspondence rows"), rows * 4);
  r.expectEof();
  return { imageIdA, imageIdB, points };
}
