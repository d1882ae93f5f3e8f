#!/usr/bin/env node
/**
 * driftnet-export: turn frame-image clips into training-pipeline inputs.
 *
 * Emits one binary feature file per clip plus a manifest the `driftnet`
 * CLI consumes directly (`driftnet inspect <out>/manifest.tsv` validates
 * the result).
 */

import yargs from 'yargs';
import { hideBin } from 'yargs/helpers';

import { BACKBONES, makeSpec, seededEmbedder, truncatedEmbedder, Embedder } from './backbone.js';
import { discoverClips, exportCorpus } from './export.js';

const PREPROCESS_HELP =
  'Frames are decoded, the shorter side is scaled to 256, the center ' +
  '224x224 patch is cropped, channels are reordered RGB->BGR and the ' +
  'ImageNet channel means (103.939, 116.779, 123.68) are subtracted. ' +
  'Without --weights a frozen seeded random conv stack stands in for the ' +
  'pretrained network: output widths and determinism are identical, but ' +
  'the features are untrained, so use real weights for accuracy work.';

export async function main(argv: string[]): Promise<number> {
  const args = await yargs(argv)
    .scriptName('driftnet-export')
    .usage('$0 --input <corpus> --backbone <name> --out <dir>\n\n' + PREPROCESS_HELP)
    .option('input', {
      type: 'string',
      demandOption: true,
      describe: 'corpus root: <label>/<clip>/ frame dirs, or flat <clip>/ dirs with --label',
    })
    .option('backbone', {
      type: 'string',
      choices: Object.keys(BACKBONES),
      demandOption: true,
      describe: 'feature layer to export (vgg16-fc1: 4096 wide, resnet50-avgpool: 2048 wide)',
    })
    .option('out', { type: 'string', demandOption: true, describe: 'output directory' })
    .option('stride', {
      type: 'number',
      default: 1,
      describe: 'sample every stride-th frame (1 = every frame)',
    })
    .option('weights', {
      type: 'string',
      describe: 'model.json of a pretrained network to truncate; omit for the seeded stand-in',
    })
    .option('label', {
      type: 'string',
      describe: 'class label for every clip when the corpus root is flat',
    })
    .option('concurrency', { type: 'number', default: 2, describe: 'clips exported in parallel' })
    .strict()
    .help()
    .parse();

  const spec = makeSpec(args.backbone as string, args.stride);
  const clips = discoverClips(args.input, args.label);
  const embedder: Embedder = args.weights
    ? await truncatedEmbedder(args.weights, spec)
    : seededEmbedder(spec);
  try {
    const result = await exportCorpus(clips, spec, args.out, embedder, args.concurrency);
    const frames = result.exports.reduce((a, e) => a + e.frames, 0);
    console.log(
      `exported ${result.exports.length} clips (${frames} frames, width ${spec.expectedDim}) ` +
        `-> ${result.manifestPath}`,
    );
  } finally {
    embedder.dispose();
  }
  return 0;
}

const invokedDirectly =
  process.argv[1] !== undefined &&
  import.meta.url.endsWith(process.argv[1].split('/').pop() as string);

if (invokedDirectly) {
  main(hideBin(process.argv)).then(
    (code) => process.exit(code),
    (err) => {
      console.error(`error: ${err instanceof Error ? err.message : err}`);
      process.exit(1);
    },
  );
}
