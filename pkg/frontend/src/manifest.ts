/**
 * Tab-separated dataset manifest shared with the training pipeline.
 *
 * Header: `#cdnf-manifest<TAB>feature_dim=<d><TAB>classes=<comma-joined>`
 * followed by one `video_id<TAB>relative/path<TAB>label` row per video.
 * Paths are relative to the manifest's directory.
 */

import fs from 'node:fs';

export interface ManifestEntry {
  videoId: string;
  path: string;
  label: string;
}

export interface Manifest {
  featureDim: number;
  classes: string[];
  entries: ManifestEntry[];
}

function checkField(value: string, what: string, noCommas = false): void {
  if (value.length === 0) {
    throw new Error(`${what} must not be empty`);
  }
  if (/[\t\n\r]/.test(value)) {
    throw new Error(`${what} ${JSON.stringify(value)} contains a tab or newline`);
  }
  if (noCommas && value.includes(',')) {
    throw new Error(`${what} ${JSON.stringify(value)} contains a comma`);
  }
}

export function formatManifest(manifest: Manifest): string {
  if (!Number.isInteger(manifest.featureDim) || manifest.featureDim < 1) {
    throw new Error(`feature_dim must be a positive integer, got ${manifest.featureDim}`);
  }
  if (manifest.classes.length === 0) {
    throw new Error('manifest needs at least one class');
  }
  const seenClass = new Set<string>();
  for (const label of manifest.classes) {
    checkField(label, 'class label', true);
    if (seenClass.has(label)) throw new Error(`duplicate class ${JSON.stringify(label)}`);
    seenClass.add(label);
  }

  const lines = [
    `#cdnf-manifest\tfeature_dim=${manifest.featureDim}\tclasses=${manifest.classes.join(',')}`,
  ];
  const seenId = new Set<string>();
  for (const entry of manifest.entries) {
    checkField(entry.videoId, 'video_id');
    checkField(entry.path, 'path');
    checkField(entry.label, 'label', true);
    if (!seenClass.has(entry.label)) {
      throw new Error(
        `label ${JSON.stringify(entry.label)} of video ${entry.videoId} is not in the class set`,
      );
    }
    if (seenId.has(entry.videoId)) {
      throw new Error(`duplicate video_id ${JSON.stringify(entry.videoId)}`);
    }
    seenId.add(entry.videoId);
    lines.push(`${entry.videoId}\t${entry.path}\t${entry.label}`);
  }
  return lines.join('\n') + '\n';
}

export function parseManifest(text: string): Manifest {
  const lines = text.split(/\r?\n/).filter((line) => line.length > 0);
  if (lines.length === 0 || !lines[0].startsWith('#cdnf-manifest')) {
    throw new Error('not a manifest: missing #cdnf-manifest header');
  }
  const headerParts = lines[0].split('\t');
  const dimPart = headerParts.find((p) => p.startsWith('feature_dim='));
  const classPart = headerParts.find((p) => p.startsWith('classes='));
  if (!dimPart || !classPart) {
    throw new Error('manifest header is missing feature_dim or classes');
  }
  const featureDim = Number(dimPart.slice('feature_dim='.length));
  const classes = classPart.slice('classes='.length).split(',');
  const entries: ManifestEntry[] = [];
  for (const line of lines.slice(1)) {
    const fields = line.split('\t');
    if (fields.length !== 3) {
      throw new Error(`manifest row needs 3 tab-separated fields, got ${JSON.stringify(line)}`);
    }
    entries.push({ videoId: fields[0], path: fields[1], label: fields[2] });
  }
  return { featureDim, classes, entries };
}

/**
 * Merge new entries into a manifest file, creating it if absent.
 *
 * Re-exported video ids replace their old rows; new labels extend the class
 * set in first-seen order. A feature_dim change is an error since mixed
 * widths cannot be pooled together.
 */
export function updateManifestFile(
  path: string,
  featureDim: number,
  additions: ManifestEntry[],
): Manifest {
  let manifest: Manifest = { featureDim, classes: [], entries: [] };
  if (fs.existsSync(path)) {
    manifest = parseManifest(fs.readFileSync(path, 'utf8'));
    if (manifest.featureDim !== featureDim) {
      throw new Error(
        `manifest ${path} has feature_dim ${manifest.featureDim}, new exports have ${featureDim}`,
      );
    }
  }
  const byId = new Map(manifest.entries.map((e) => [e.videoId, e]));
  const classes = [...manifest.classes];
  for (const entry of additions) {
    byId.set(entry.videoId, entry);
    if (!classes.includes(entry.label)) classes.push(entry.label);
  }
  const merged: Manifest = { featureDim, classes, entries: [...byId.values()] };
  fs.writeFileSync(path, formatManifest(merged));
  return merged;
}
