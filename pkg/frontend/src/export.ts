/**
 * Clip -> feature-file export.
 *
 * Videos are independent, so a corpus export runs them through a small
 * concurrency pool; each clip produces exactly one output file.
 */

import fs from 'node:fs';
import path from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { Embedder, ExtractorSpec, imageToTensor } from './backbone.js';
import { encodeCdnf } from './cdnf.js';
import { listFrameFiles, prepareFrame } from './frames.js';
import { ManifestEntry, updateManifestFile } from './manifest.js';

const BATCH_FRAMES = 8;

export interface ExportResult {
  videoId: string;
  outPath: string;
  frames: number;
  width: number;
}

/** Embed every stride-th frame of a clip directory into one feature file. */
export async function exportVideo(
  clipDir: string,
  spec: ExtractorSpec,
  outPath: string,
  embedder: Embedder,
): Promise<ExportResult> {
  const allFrames = listFrameFiles(clipDir);
  const sampled = allFrames.filter((_, i) => i % spec.stride === 0);

  const rows = new Float32Array(sampled.length * spec.expectedDim);
  for (let start = 0; start < sampled.length; start += BATCH_FRAMES) {
    const files = sampled.slice(start, start + BATCH_FRAMES);
    const images = files.map((f) => imageToTensor(prepareFrame(f, spec.inputSize)));
    const batch = tf.stack(images) as tf.Tensor4D;
    images.forEach((t) => t.dispose());
    const features = embedder.embed(batch);
    batch.dispose();
    if (features.shape[1] !== spec.expectedDim) {
      features.dispose();
      throw new Error(
        `backbone produced width ${features.shape[1]}, expected ${spec.expectedDim}`,
      );
    }
    rows.set(await features.data<'float32'>(), start * spec.expectedDim);
    features.dispose();
  }

  const encoded = encodeCdnf({ frames: sampled.length, width: spec.expectedDim, data: rows });
  fs.mkdirSync(path.dirname(outPath), { recursive: true });
  fs.writeFileSync(outPath, encoded);
  return {
    videoId: path.basename(clipDir),
    outPath,
    frames: sampled.length,
    width: spec.expectedDim,
  };
}

export interface ClipTask {
  clipDir: string;
  label: string;
  videoId: string;
}

/**
 * Find clips under a corpus root laid out as <root>/<label>/<clip>/frames.
 * A flat root whose immediate subdirectories hold frames is also accepted;
 * then every clip gets `flatLabel`.
 */
export function discoverClips(root: string, flatLabel?: string): ClipTask[] {
  const tasks: ClipTask[] = [];
  const topLevel = fs
    .readdirSync(root, { withFileTypes: true })
    .filter((d) => d.isDirectory())
    .map((d) => d.name)
    .sort();
  for (const name of topLevel) {
    const dir = path.join(root, name);
    const subdirs = fs
      .readdirSync(dir, { withFileTypes: true })
      .filter((d) => d.isDirectory())
      .map((d) => d.name)
      .sort();
    if (subdirs.length === 0) {
      tasks.push({ clipDir: dir, label: flatLabel ?? name, videoId: name });
    } else {
      for (const clip of subdirs) {
        tasks.push({
          clipDir: path.join(dir, clip),
          label: name,
          videoId: `${name}_${clip}`,
        });
      }
    }
  }
  if (tasks.length === 0) {
    throw new Error(`no clip directories found under ${root}`);
  }
  return tasks;
}

async function runPool<T>(tasks: (() => Promise<T>)[], concurrency: number): Promise<T[]> {
  const results = new Array<T>(tasks.length);
  let next = 0;
  const worker = async () => {
    while (next < tasks.length) {
      const index = next++;
      results[index] = await tasks[index]();
    }
  };
  await Promise.all(Array.from({ length: Math.min(concurrency, tasks.length) }, worker));
  return results;
}

export interface CorpusResult {
  manifestPath: string;
  exports: ExportResult[];
}

/** Export a set of clips and write/update the manifest beside them. */
export async function exportCorpus(
  tasks: ClipTask[],
  spec: ExtractorSpec,
  outDir: string,
  embedder: Embedder,
  concurrency = 2,
): Promise<CorpusResult> {
  fs.mkdirSync(path.join(outDir, 'features'), { recursive: true });
  const jobs = tasks.map((task) => () => {
    const rel = path.join('features', `${task.videoId}.cdnf`);
    return exportVideo(task.clipDir, spec, path.join(outDir, rel), embedder);
  });
  const exports = await runPool(jobs, concurrency);

  const entries: ManifestEntry[] = tasks.map((task) => ({
    videoId: task.videoId,
    path: path.join('features', `${task.videoId}.cdnf`),
    label: task.label,
  }));
  const manifestPath = path.join(outDir, 'manifest.tsv');
  updateManifestFile(manifestPath, spec.expectedDim, entries);
  return { manifestPath, exports };
}
