import fs from 'node:fs';
import os from 'node:os';
import path from 'node:path';

import { afterEach, beforeEach, describe, expect, it } from 'vitest';

import { formatManifest, parseManifest, updateManifestFile } from '../src/manifest.js';

let dir: string;
beforeEach(() => {
  dir = fs.mkdtempSync(path.join(os.tmpdir(), 'manifest-'));
});
afterEach(() => {
  fs.rmSync(dir, { recursive: true, force: true });
});

describe('manifest text format', () => {
  it('writes the exact header and row layout', () => {
    const text = formatManifest({
      featureDim: 2048,
      classes: ['walk', 'run'],
      entries: [
        { videoId: 'walk_a', path: 'features/walk_a.cdnf', label: 'walk' },
        { videoId: 'run_b', path: 'features/run_b.cdnf', label: 'run' },
      ],
    });
    expect(text).toBe(
      '#cdnf-manifest\tfeature_dim=2048\tclasses=walk,run\n' +
        'walk_a\tfeatures/walk_a.cdnf\twalk\n' +
        'run_b\tfeatures/run_b.cdnf\trun\n',
    );
  });

  it('round-trips through parse', () => {
    const manifest = {
      featureDim: 16,
      classes: ['a', 'b'],
      entries: [{ videoId: 'v', path: 'features/v.cdnf', label: 'b' }],
    };
    expect(parseManifest(formatManifest(manifest))).toEqual(manifest);
  });

  it('rejects reserved characters and unknown labels', () => {
    expect(() =>
      formatManifest({
        featureDim: 4,
        classes: ['a,b'],
        entries: [],
      }),
    ).toThrow(/comma/);
    expect(() =>
      formatManifest({
        featureDim: 4,
        classes: ['a'],
        entries: [{ videoId: 'v\tw', path: 'p', label: 'a' }],
      }),
    ).toThrow(/tab or newline/);
    expect(() =>
      formatManifest({
        featureDim: 4,
        classes: ['a'],
        entries: [{ videoId: 'v', path: 'p', label: 'ghost' }],
      }),
    ).toThrow(/not in the class set/);
  });

  it('rejects duplicate ids and classes', () => {
    expect(() =>
      formatManifest({
        featureDim: 4,
        classes: ['a'],
        entries: [
          { videoId: 'v', path: 'p1', label: 'a' },
          { videoId: 'v', path: 'p2', label: 'a' },
        ],
      }),
    ).toThrow(/duplicate video_id/);
    expect(() => formatManifest({ featureDim: 4, classes: ['a', 'a'], entries: [] })).toThrow(
      /duplicate class/,
    );
  });
});

describe('manifest updates', () => {
  it('creates, then merges by video id and extends classes', () => {
    const file = path.join(dir, 'manifest.tsv');
    updateManifestFile(file, 8, [{ videoId: 'v1', path: 'features/v1.cdnf', label: 'walk' }]);
    const merged = updateManifestFile(file, 8, [
      { videoId: 'v1', path: 'features/v1_new.cdnf', label: 'walk' },
      { videoId: 'v2', path: 'features/v2.cdnf', label: 'run' },
    ]);

    expect(merged.classes).toEqual(['walk', 'run']);
    expect(merged.entries).toHaveLength(2);
    expect(merged.entries.find((e) => e.videoId === 'v1')?.path).toBe('features/v1_new.cdnf');

    const reread = parseManifest(fs.readFileSync(file, 'utf8'));
    expect(reread).toEqual(merged);
  });

  it('refuses to mix feature widths', () => {
    const file = path.join(dir, 'manifest.tsv');
    updateManifestFile(file, 2048, [{ videoId: 'v1', path: 'p', label: 'a' }]);
    expect(() => updateManifestFile(file, 4096, [{ videoId: 'v2', path: 'q', label: 'a' }])).toThrow(
      /feature_dim 2048.*4096/,
    );
  });
});
