/**
 * Binary per-video feature file format shared with the training pipeline.
 *
 * Layout: 4-byte magic "CDNF", one version byte (1), frame count and
 * feature width as little-endian u64, then row-major float32 frames.
 */

const MAGIC = Buffer.from('CDNF', 'ascii');
const VERSION = 1;
const HEADER_BYTES = 4 + 1 + 8 + 8;

export interface FeatureMatrix {
  frames: number;
  width: number;
  data: Float32Array; // row-major, frames * width entries
}

export function encodeCdnf(matrix: FeatureMatrix): Buffer {
  const { frames, width, data } = matrix;
  if (!Number.isInteger(frames) || frames < 1) {
    throw new Error(`feature file needs at least one frame, got ${frames}`);
  }
  if (!Number.isInteger(width) || width < 1) {
    throw new Error(`feature width must be a positive integer, got ${width}`);
  }
  if (data.length !== frames * width) {
    throw new Error(
      `data has ${data.length} values, expected ${frames} x ${width} = ${frames * width}`,
    );
  }
  for (let i = 0; i < data.length; i++) {
    if (!Number.isFinite(data[i])) {
      const frame = Math.floor(i / width);
      throw new Error(`non-finite feature at frame ${frame}, feature ${i % width}`);
    }
  }

  const out = Buffer.alloc(HEADER_BYTES + data.length * 4);
  MAGIC.copy(out, 0);
  out.writeUInt8(VERSION, 4);
  out.writeBigUInt64LE(BigInt(frames), 5);
  out.writeBigUInt64LE(BigInt(width), 13);
  for (let i = 0; i < data.length; i++) {
    out.writeFloatLE(data[i], HEADER_BYTES + i * 4);
  }
  return out;
}

/** Inverse of encodeCdnf; used by tests and by the exporter's self-check. */
export function decodeCdnf(buffer: Buffer): FeatureMatrix {
  if (buffer.length < HEADER_BYTES) {
    throw new Error(`file is ${buffer.length} bytes, header needs ${HEADER_BYTES}`);
  }
  if (!buffer.subarray(0, 4).equals(MAGIC)) {
    throw new Error('bad magic: not a feature file');
  }
  const version = buffer.readUInt8(4);
  if (version !== VERSION) {
    throw new Error(`unsupported feature file version ${version}`);
  }
  const frames = Number(buffer.readBigUInt64LE(5));
  const width = Number(buffer.readBigUInt64LE(13));
  const expected = HEADER_BYTES + frames * width * 4;
  if (buffer.length !== expected) {
    throw new Error(`file is ${buffer.length} bytes, header promises ${expected}`);
  }
  const data = new Float32Array(frames * width);
  for (let i = 0; i < data.length; i++) {
    data[i] = buffer.readFloatLE(HEADER_BYTES + i * 4);
  }
  return { frames, width, data };
}
