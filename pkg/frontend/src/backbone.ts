/**
 * Frame embedding backbones.
 *
 * Two modes share one interface:
 *  - with --weights, a pretrained image network is loaded and truncated at
 *    the backbone's feature layer (the classifier head is discarded);
 *  - without weights, a small frozen conv stack with deterministically
 *    seeded random filters produces features of the documented width. Those
 *    features are untrained; they keep every format and pipeline property
 *    (width, determinism, frame order) and are meant for integration tests
 *    and plumbing work, not for accuracy.
 *
 * Preprocessing in both modes is the standard recipe for these networks:
 * shorter side scaled to 256, center 224 crop, channels reordered RGB->BGR,
 * ImageNet channel means subtracted (no scaling to [0, 1]).
 */

import fs from 'node:fs';
import path from 'node:path';

import * as tf from '@tensorflow/tfjs';

import { RgbImage } from './frames.js';

export type BackboneName = 'vgg16-fc1' | 'resnet50-avgpool';

export interface BackboneInfo {
  expectedDim: number;
  inputSize: number;
  truncationLayer: string; // layer name in the pretrained graph
  fallbackSeed: number;
}

export const BACKBONES: Record<BackboneName, BackboneInfo> = {
  'vgg16-fc1': { expectedDim: 4096, inputSize: 224, truncationLayer: 'fc1', fallbackSeed: 0x16fc1 },
  'resnet50-avgpool': { expectedDim: 2048, inputSize: 224, truncationLayer: 'avg_pool', fallbackSeed: 0x50a7 },
};

export interface ExtractorSpec {
  backbone: BackboneName;
  expectedDim: number;
  inputSize: number;
  stride: number;
}

export function makeSpec(backbone: string, stride = 1): ExtractorSpec {
  const info = BACKBONES[backbone as BackboneName];
  if (!info) {
    throw new Error(
      `unknown backbone ${JSON.stringify(backbone)}; expected one of ${Object.keys(BACKBONES).join(', ')}`,
    );
  }
  if (!Number.isInteger(stride) || stride < 1) {
    throw new Error(`frame stride must be a positive integer, got ${stride}`);
  }
  return { backbone: backbone as BackboneName, expectedDim: info.expectedDim, inputSize: info.inputSize, stride };
}

// BGR means of the ImageNet training set, the convention both networks use
const IMAGENET_BGR_MEANS = [103.939, 116.779, 123.68];

export function preprocess(batch: tf.Tensor4D): tf.Tensor4D {
  return tf.tidy(() => {
    const bgr = tf.reverse(batch, -1);
    return tf.sub(bgr, IMAGENET_BGR_MEANS) as tf.Tensor4D;
  });
}

export interface Embedder {
  dim: number;
  /** (batch, size, size, 3) RGB 0..255 -> (batch, dim) features */
  embed(batch: tf.Tensor4D): tf.Tensor2D;
  dispose(): void;
}

function mulberry32(seed: number): () => number {
  let a = seed >>> 0;
  return () => {
    a = (a + 0x6d2b79f5) >>> 0;
    let t = a;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function seededUniform(rand: () => number, shape: number[], limit: number): tf.Tensor {
  const count = shape.reduce((a, b) => a * b, 1);
  const values = new Float32Array(count);
  for (let i = 0; i < count; i++) {
    values[i] = (rand() * 2 - 1) * limit;
  }
  return tf.tensor(values, shape);
}

/** Frozen random conv stack; same seed -> bit-identical weights every run. */
export function seededEmbedder(spec: ExtractorSpec): Embedder {
  const info = BACKBONES[spec.backbone];
  const rand = mulberry32(info.fallbackSeed);
  const glorot = (fanIn: number, fanOut: number) => Math.sqrt(6 / (fanIn + fanOut));

  const conv1 = seededUniform(rand, [5, 5, 3, 16], glorot(5 * 5 * 3, 16)) as tf.Tensor4D;
  const conv2 = seededUniform(rand, [3, 3, 16, 32], glorot(3 * 3 * 16, 32)) as tf.Tensor4D;
  const project = seededUniform(rand, [32, spec.expectedDim], glorot(32, spec.expectedDim)) as tf.Tensor2D;

  return {
    dim: spec.expectedDim,
    embed(batch: tf.Tensor4D): tf.Tensor2D {
      return tf.tidy(() => {
        const prepped = preprocess(batch);
        let x = tf.relu(tf.conv2d(prepped, conv1, 4, 'same'));
        x = tf.avgPool(x as tf.Tensor4D, 2, 2, 'same');
        x = tf.relu(tf.conv2d(x as tf.Tensor4D, conv2, 2, 'same'));
        const pooled = tf.mean(x, [1, 2]) as tf.Tensor2D;
        return tf.matMul(pooled, project);
      });
    },
    dispose() {
      conv1.dispose();
      conv2.dispose();
      project.dispose();
    },
  };
}

/** Reads a layers-model saved as model.json + weight shard files. */
async function loadModelFromDisk(modelJsonPath: string): Promise<tf.LayersModel> {
  const dir = path.dirname(modelJsonPath);
  const raw = JSON.parse(fs.readFileSync(modelJsonPath, 'utf8'));
  const specs: tf.io.WeightsManifestEntry[] = [];
  const shards: Buffer[] = [];
  for (const group of raw.weightsManifest ?? []) {
    specs.push(...group.weights);
    for (const shard of group.paths) {
      shards.push(fs.readFileSync(path.join(dir, shard)));
    }
  }
  const weightData = Buffer.concat(shards);
  return tf.loadLayersModel(
    tf.io.fromMemory({
      modelTopology: raw.modelTopology,
      weightSpecs: specs,
      weightData: weightData.buffer.slice(
        weightData.byteOffset,
        weightData.byteOffset + weightData.byteLength,
      ),
    }),
  );
}

/**
 * Load a pretrained network and cut it at the backbone's feature layer.
 * The layer's output is flattened to one feature vector per frame and must
 * match the backbone's documented width.
 */
export async function truncatedEmbedder(
  modelJsonPath: string,
  spec: ExtractorSpec,
): Promise<Embedder> {
  const full = await loadModelFromDisk(modelJsonPath);
  const info = BACKBONES[spec.backbone];
  let layer: tf.layers.Layer;
  try {
    layer = full.getLayer(info.truncationLayer);
  } catch {
    throw new Error(
      `model ${modelJsonPath} has no layer named ${JSON.stringify(info.truncationLayer)} to truncate at`,
    );
  }
  const truncated = tf.model({ inputs: full.inputs, outputs: layer.output as tf.SymbolicTensor });
  const outDim = (layer.output as tf.SymbolicTensor).shape
    .slice(1)
    .reduce((a: number, b) => a * (b ?? 1), 1);
  if (outDim !== spec.expectedDim) {
    throw new Error(
      `layer ${info.truncationLayer} yields ${outDim} features per frame, ` +
        `backbone ${spec.backbone} requires ${spec.expectedDim}`,
    );
  }
  return {
    dim: spec.expectedDim,
    embed(batch: tf.Tensor4D): tf.Tensor2D {
      return tf.tidy(() => {
        const out = truncated.predict(preprocess(batch)) as tf.Tensor;
        return tf.reshape(out, [batch.shape[0], spec.expectedDim]);
      });
    },
    dispose() {
      truncated.dispose();
    },
  };
}

export function imageToTensor(image: RgbImage): tf.Tensor3D {
  return tf.tensor3d(image.data, [image.height, image.width, 3]);
}
