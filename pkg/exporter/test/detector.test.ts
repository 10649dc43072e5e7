import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { describe, expect, it } from 'vitest';
import {
  BuiltinDetector,
  DetectorUnavailableError,
  FEATURE_DIM,
  loadDetector,
} from '../src/detector.js';
import { preprocess } from '../src/preprocess.js';
import { blobsImage, checkerboardImage } from './helpers.js';

describe('BuiltinDetector', () => {
  it('emits 2048-dim features with scores in [0,1] and positive boxes', () => {
    const detections = new BuiltinDetector().detect(preprocess(blobsImage()));
    expect(detections.length).toBeGreaterThan(0);
    for (const d of detections) {
      expect(d.feature).toHaveLength(FEATURE_DIM);
      expect(d.score).toBeGreaterThanOrEqual(0);
      expect(d.score).toBeLessThanOrEqual(1);
      expect(d.bbox[2]).toBeGreaterThan(0);
      expect(d.bbox[3]).toBeGreaterThan(0);
      expect(d.label.length).toBeGreaterThan(0);
    }
  });

  it('is deterministic for a fixed input', () => {
    const input = preprocess(checkerboardImage());
    const first = new BuiltinDetector().detect(input);
    const second = new BuiltinDetector().detect(input);
    expect(JSON.stringify(second)).toBe(JSON.stringify(first));
  });

  it('changes with the checkpoint seed', () => {
    const input = preprocess(blobsImage());
    const a = new BuiltinDetector({ seed: 1 }).detect(input);
    const b = new BuiltinDetector({ seed: 2 }).detect(input);
    expect(JSON.stringify(a)).not.toBe(JSON.stringify(b));
  });
});

describe('loadDetector', () => {
  it('resolves the bundled detector', () => {
    expect(loadDetector('builtin')).toBeInstanceOf(BuiltinDetector);
  });

  it('fails loudly when a checkpoint is missing', () => {
    expect(() => loadDetector('/nonexistent/checkpoint.json')).toThrow(DetectorUnavailableError);
  });

  it('reads a checkpoint file', () => {
    const dir = mkdtempSync(join(tmpdir(), 'kvqa-detector-'));
    const path = join(dir, 'checkpoint.json');
    writeFileSync(path, JSON.stringify({ seed: 99, labels: ['thing', 'stuff'] }));
    const detections = loadDetector(path).detect(preprocess(blobsImage()));
    expect(detections.every((d) => d.label === 'thing' || d.label === 'stuff')).toBe(true);
  });
});
