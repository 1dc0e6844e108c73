/**
 * NPY v1.0/v2.0 reader/writer for the shared on-disk tensor contract:
 * little-endian '<f4' or '<f8', C-contiguous, rank 2, 3, or 4.
 *
 * Parsing is zero-copy for '<f8' payloads whose byte offset is 8-aligned
 * (headers are padded to a 64-byte multiple, so file-level offsets always
 * are; Node Buffer pooling can still misalign the backing store).  All
 * other cases perform exactly one documented copy into a Float64Array.
 */

import {
  MalformedHeaderError,
  NonFiniteDataError,
  PayloadLengthError,
  UnsupportedDtypeError,
} from "./errors";

const MAGIC = Uint8Array.from([0x93, 0x4e, 0x55, 0x4d, 0x50, 0x59]); // \x93NUMPY

export type Precision = "float32" | "float64";

export interface NpyArray {
  readonly shape: readonly number[];
  /** Row-major float64 values, converted from the stored precision. */
  readonly data: Float64Array;
  readonly precision: Precision;
}

const LITTLE_ENDIAN_PLATFORM = new Uint8Array(Float64Array.of(1).buffer)[7] === 0x3f;

function parseHeaderDict(text: string): { descr: string; fortran: boolean; shape: number[] } {
  const descrMatch = /'descr'\s*:\s*'([^']*)'/.exec(text);
  const fortranMatch = /'fortran_order'\s*:\s*(True|False)/.exec(text);
  const shapeMatch = /'shape'\s*:\s*\(([^)]*)\)/.exec(text);
  if (!descrMatch || !fortranMatch || !shapeMatch) {
    throw new MalformedHeaderError(`unparsable header dict: ${text.trim()}`);
  }
  const dims = shapeMatch[1]
    .split(",")
    .map((part) => part.trim())
    .filter((part) => part.length > 0)
    .map((part) => {
      const value = Number(part);
      if (!Number.isInteger(value)) {
        throw new MalformedHeaderError(`non-integer dimension ${part}`);
      }
      return value;
    });
  return { descr: descrMatch[1], fortran: fortranMatch[1] === "True", shape: dims };
}

/** Parse NPY bytes into shape + float64 data. */
export function parseNpy(bytes: Uint8Array): NpyArray {
  if (bytes.length < 10) {
    throw new MalformedHeaderError("file shorter than an NPY header");
  }
  for (let i = 0; i < MAGIC.length; i++) {
    if (bytes[i] !== MAGIC[i]) {
      throw new MalformedHeaderError("bad magic");
    }
  }
  const major = bytes[6];
  const view = new DataView(bytes.buffer, bytes.byteOffset, bytes.byteLength);
  let headerLen: number;
  let headerStart: number;
  if (major === 1) {
    headerLen = view.getUint16(8, true);
    headerStart = 10;
  } else if (major === 2) {
    headerLen = view.getUint32(8, true);
    headerStart = 12;
  } else {
    throw new MalformedHeaderError(`unsupported NPY version ${major}`);
  }
  if (headerStart + headerLen > bytes.length) {
    throw new MalformedHeaderError("truncated header dict");
  }
  const headerText = new TextDecoder("latin1").decode(
    bytes.subarray(headerStart, headerStart + headerLen)
  );
  const { descr, fortran, shape } = parseHeaderDict(headerText);
  if (descr !== "<f4" && descr !== "<f8") {
    throw new UnsupportedDtypeError(`unsupported descr '${descr}'; expected '<f4' or '<f8'`);
  }
  if (fortran) {
    throw new MalformedHeaderError("fortran_order=True files are rejected, not transposed");
  }
  const itemSize = descr === "<f4" ? 4 : 8;
  const count = shape.reduce((a, b) => a * b, 1);
  const payloadOffset = headerStart + headerLen;
  const payloadBytes = bytes.length - payloadOffset;
  if (payloadBytes !== count * itemSize) {
    throw new PayloadLengthError(
      `declared shape (${shape.join(", ")}) needs ${count * itemSize} payload bytes, file has ${payloadBytes}`
    );
  }
  const absOffset = bytes.byteOffset + payloadOffset;
  let data: Float64Array;
  if (descr === "<f8" && LITTLE_ENDIAN_PLATFORM && absOffset % 8 === 0) {
    // zero-copy view over the payload
    data = new Float64Array(bytes.buffer, absOffset, count);
  } else if (descr === "<f8") {
    data = new Float64Array(count);
    for (let i = 0; i < count; i++) {
      data[i] = view.getFloat64(payloadOffset + 8 * i, true);
    }
  } else {
    // single documented copy, widening float32 -> float64
    data = new Float64Array(count);
    for (let i = 0; i < count; i++) {
      data[i] = view.getFloat32(payloadOffset + 4 * i, true);
    }
  }
  for (let i = 0; i < count; i++) {
    if (!Number.isFinite(data[i])) {
      throw new NonFiniteDataError(i);
    }
  }
  return { shape, data, precision: descr === "<f4" ? "float32" : "float64" };
}

/** Encode a row-major float64 array as NPY v1.0 at the given precision. */
export function encodeNpy(shape: readonly number[], data: Float64Array, precision: Precision): Uint8Array {
  const descr = precision === "float32" ? "<f4" : "<f8";
  let dict = `{'descr': '${descr}', 'fortran_order': False, 'shape': (${shape.join(", ")}${shape.length === 1 ? "," : ""}), }`;
  const base = MAGIC.length + 2 + 2;
  let pad = 64 - ((base + dict.length + 1) % 64);
  if (pad === 64) pad = 0;
  dict = dict + " ".repeat(pad) + "\n";

  const itemSize = precision === "float32" ? 4 : 8;
  const out = new Uint8Array(base + dict.length + data.length * itemSize);
  out.set(MAGIC, 0);
  out[6] = 1;
  out[7] = 0;
  const view = new DataView(out.buffer);
  view.setUint16(8, dict.length, true);
  for (let i = 0; i < dict.length; i++) {
    out[10 + i] = dict.charCodeAt(i);
  }
  const payload = base + dict.length;
  if (precision === "float32") {
    for (let i = 0; i < data.length; i++) {
      view.setFloat32(payload + 4 * i, Math.fround(data[i]), true);
    }
  } else {
    for (let i = 0; i < data.length; i++) {
      view.setFloat64(payload + 8 * i, data[i], true);
    }
  }
  return out;
}
