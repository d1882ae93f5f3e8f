import fs from 'node:fs';
import path from 'node:path';

import { PNG } from 'pngjs';

/** Deterministic RGB test pattern: gradients plus a frame-dependent stripe. */
export function framePixels(frame: number, size: number): Buffer {
  const data = Buffer.alloc(size * size * 4);
  for (let y = 0; y < size; y++) {
    for (let x = 0; x < size; x++) {
      const i = (y * size + x) * 4;
      data[i] = Math.floor((x * 255) / (size - 1));
      data[i + 1] = Math.floor((y * 255) / (size - 1));
      data[i + 2] = (x + frame * 7) % size < size / 4 ? 220 : 40;
      data[i + 3] = 255;
    }
  }
  return data;
}

export function writePng(file: string, rgba: Buffer, size: number): void {
  const png = new PNG({ width: size, height: size });
  rgba.copy(png.data);
  fs.mkdirSync(path.dirname(file), { recursive: true });
  fs.writeFileSync(file, PNG.sync.write(png));
}

/** Write `frames` PNG files into a clip directory; returns the directory. */
export function makeClip(dir: string, frames: number, size = 64): string {
  for (let f = 0; f < frames; f++) {
    writePng(path.join(dir, `frame_${String(f).padStart(3, '0')}.png`), framePixels(f, size), size);
  }
  return dir;
}
