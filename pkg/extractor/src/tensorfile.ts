// Binary tensor container shared with the Python side. Layout:
//   bytes 0..3   magic "SEMB"
//   byte  4      format version (1)
//   byte  5      dtype: 0 = float32, 1 = float64
//   bytes 6..7   reserved, zero
//   bytes 8..11  ndim as u32 LE
//   bytes 12..15 zero padding (header is 16 bytes flat)
//   then ndim dims as u64 LE, then the row-major little-endian payload.
import fs from "node:fs";

const MAGIC = "SEMB";
const VERSION = 1;
const DTYPE_F64 = 1;

export interface Tensor {
  dims: number[];
  data: Float64Array; // row-major
}

export function tensorBytes(t: Tensor): Buffer {
  const count = t.dims.reduce((a, b) => a * b, 1);
  if (count !== t.data.length) {
    throw new Error(`dims ${t.dims} disagree with ${t.data.length} values`);
  }
  const buf = Buffer.alloc(16 + 8 * t.dims.length + 8 * count);
  buf.write(MAGIC, 0, "ascii");
  buf.writeUInt8(VERSION, 4);
  buf.writeUInt8(DTYPE_F64, 5);
  buf.writeUInt16LE(0, 6);
  buf.writeUInt32LE(t.dims.length, 8);
  // bytes 12..15 stay zero
  let off = 16;
  for (const dim of t.dims) {
    buf.writeBigUInt64LE(BigInt(dim), off);
    off += 8;
  }
  for (let i = 0; i < count; i++) {
    buf.writeDoubleLE(t.data[i], off);
    off += 8;
  }
  return buf;
}

export function writeTensor(path: string, t: Tensor): void {
  fs.writeFileSync(path, tensorBytes(t));
}

export function readTensor(path: string): Tensor {
  const buf = fs.readFileSync(path);
  if (buf.subarray(0, 4).toString("ascii") !== MAGIC) {
    throw new Error(`${path}: not a SEMB tensor`);
  }
  if (buf.readUInt8(4) !== VERSION) {
    throw new Error(`${path}: unsupported version ${buf.readUInt8(4)}`);
  }
  const dtype = buf.readUInt8(5);
  if (dtype !== 0 && dtype !== DTYPE_F64) {
    throw new Error(`${path}: unsupported dtype ${dtype}`);
  }
  const ndim = buf.readUInt32LE(8);
  const dims: number[] = [];
  let off = 16;
  for (let i = 0; i < ndim; i++) {
    dims.push(Number(buf.readBigUInt64LE(off)));
    off += 8;
  }
  const count = dims.reduce((a, b) => a * b, 1);
  const width = dtype === DTYPE_F64 ? 8 : 4;
  if (buf.length !== off + count * width) {
    throw new Error(`${path}: payload length disagrees with header`);
  }
  const data = new Float64Array(count);
  for (let i = 0; i < count; i++) {
    data[i] = dtype === DTYPE_F64 ? buf.readDoubleLE(off) : buf.readFloatLE(off);
    off += width;
  }
  return { dims, data };
}

/** Stack equal-length rows into one (n, width) tensor. */
export function fromRows(rows: Float64Array[], width: number): Tensor {
  const data = new Float64Array(rows.length * width);
  rows.forEach((row, i) => {
    if (row.length !== width) {
      throw new Error(`row ${i} has length ${row.length}, expected ${width}`);
    }
    data.set(row, i * width);
  });
  return { dims: [rows.length, width], data };
}
