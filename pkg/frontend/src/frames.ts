/**
 * Frame decoding and geometry.
 *
 * A "clip" is a directory of numbered frame images (.png, .jpg, .jpeg);
 * lexicographic filename order defines frame order. Container formats need
 * a prior frame dump (e.g. ffmpeg) and are out of scope here.
 */

import fs from 'node:fs';
import path from 'node:path';

import jpeg from 'jpeg-js';
import { PNG } from 'pngjs';

export interface RgbImage {
  width: number;
  height: number;
  data: Float32Array; // HWC, RGB, 0..255
}

const FRAME_EXTENSIONS = new Set(['.png', '.jpg', '.jpeg']);

export function listFrameFiles(clipDir: string): string[] {
  let names: string[];
  try {
    names = fs.readdirSync(clipDir);
  } catch (err) {
    throw new Error(`cannot decode clip ${clipDir}: ${(err as Error).message}`);
  }
  const frames = names
    .filter((n) => FRAME_EXTENSIONS.has(path.extname(n).toLowerCase()))
    .sort()
    .map((n) => path.join(clipDir, n));
  if (frames.length === 0) {
    throw new Error(`cannot decode clip ${clipDir}: no .png/.jpg frame images found`);
  }
  return frames;
}

export function decodeFrame(file: string): RgbImage {
  const buffer = fs.readFileSync(file);
  const ext = path.extname(file).toLowerCase();
  let width: number;
  let height: number;
  let rgba: Uint8Array;
  try {
    if (ext === '.png') {
      const png = PNG.sync.read(buffer);
      ({ width, height } = png);
      rgba = png.data;
    } else {
      const image = jpeg.decode(buffer, { useTArray: true });
      ({ width, height } = image);
      rgba = image.data;
    }
  } catch (err) {
    throw new Error(`cannot decode frame ${file}: ${(err as Error).message}`);
  }
  const data = new Float32Array(width * height * 3);
  for (let p = 0; p < width * height; p++) {
    data[p * 3] = rgba[p * 4];
    data[p * 3 + 1] = rgba[p * 4 + 1];
    data[p * 3 + 2] = rgba[p * 4 + 2];
  }
  return { width, height, data };
}

export function bilinearResize(src: RgbImage, width: number, height: number): RgbImage {
  const data = new Float32Array(width * height * 3);
  // align corners=false convention: sample at pixel centers
  const xScale = src.width / width;
  const yScale = src.height / height;
  for (let y = 0; y < height; y++) {
    const sy = Math.min(Math.max((y + 0.5) * yScale - 0.5, 0), src.height - 1);
    const y0 = Math.floor(sy);
    const y1 = Math.min(y0 + 1, src.height - 1);
    const wy = sy - y0;
    for (let x = 0; x < width; x++) {
      const sx = Math.min(Math.max((x + 0.5) * xScale - 0.5, 0), src.width - 1);
      const x0 = Math.floor(sx);
      const x1 = Math.min(x0 + 1, src.width - 1);
      const wx = sx - x0;
      for (let c = 0; c < 3; c++) {
        const top =
          src.data[(y0 * src.width + x0) * 3 + c] * (1 - wx) +
          src.data[(y0 * src.width + x1) * 3 + c] * wx;
        const bottom =
          src.data[(y1 * src.width + x0) * 3 + c] * (1 - wx) +
          src.data[(y1 * src.width + x1) * 3 + c] * wx;
        data[(y * width + x) * 3 + c] = top * (1 - wy) + bottom * wy;
      }
    }
  }
  return { width, height, data };
}

export function centerCrop(src: RgbImage, size: number): RgbImage {
  if (src.width < size || src.height < size) {
    throw new Error(`image ${src.width}x${src.height} is smaller than crop size ${size}`);
  }
  const left = Math.floor((src.width - size) / 2);
  const top = Math.floor((src.height - size) / 2);
  const data = new Float32Array(size * size * 3);
  for (let y = 0; y < size; y++) {
    const srcRow = ((top + y) * src.width + left) * 3;
    data.set(src.data.subarray(srcRow, srcRow + size * 3), y * size * 3);
  }
  return { width: size, height: size, data };
}

/**
 * Standard classification-network geometry: scale the shorter side to
 * size/0.875 (256 for a 224 crop), then take the center size x size patch.
 */
export function prepareFrame(file: string, inputSize: number): RgbImage {
  const decoded = decodeFrame(file);
  const shortSide = Math.round(inputSize / 0.875);
  const scale = shortSide / Math.min(decoded.width, decoded.height);
  const resized = bilinearResize(
    decoded,
    Math.max(inputSize, Math.round(decoded.width * scale)),
    Math.max(inputSize, Math.round(decoded.height * scale)),
  );
  return centerCrop(resized, inputSize);
}
