/** Region detector producing labels, scores, boxes, and 2048-dim features.
 *
 * The bundled detector is a compact deterministic stand-in for a heavyweight
 * region-CNN: grid proposals are scored by local contrast, each surviving
 * region is summarized by a pooled descriptor, and fixed seeded weights
 * project that descriptor to the 2048-dim feature space and to label logits.
 * Shipping the weights as seeded constants keeps exports reproducible on any
 * machine with no downloads.
 */

import { existsSync, readFileSync } from 'node:fs';
import type { BgrImage } from './preprocess.js';

export const FEATURE_DIM = 2048;

export interface Detection {
  label: string;
  score: number;
  /** x, y, width, height in pixels of the preprocessed image. */
  bbox: [number, number, number, number];
  feature: number[];
}

export interface Detector {
  detect(image: BgrImage): Detection[];
}

export class DetectorUnavailableError extends Error {}

const DEFAULT_LABELS = [
  'person', 'dog', 'cat', 'table', 'bottle', 'cup', 'cake', 'knife',
  'umbrella', 'flower', 'chair', 'sofa', 'plate', 'ball', 'book',
  'car', 'tree', 'window', 'plant', 'lamp', 'bowl', 'grass', 'sign', 'box',
];

const DESCRIPTOR_DIM = 28;

/** Deterministic 32-bit PRNG (mulberry32). */
function rng(seed: number): () => number {
  let state = seed >>> 0;
  return () => {
    state = (state + 0x6d2b79f5) >>> 0;
    let t = state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  };
}

function gaussianMatrix(rows: number, cols: number, seed: number): Float64Array {
  const next = rng(seed);
  const out = new Float64Array(rows * cols);
  for (let i = 0; i < out.length; i += 2) {
    // Box-Muller transform
    const u = Math.max(next(), 1e-12);
    const v = next();
    const radius = Math.sqrt(-2.0 * Math.log(u));
    out[i] = radius * Math.cos(2 * Math.PI * v);
    if (i + 1 < out.length) out[i + 1] = radius * Math.sin(2 * Math.PI * v);
  }
  return out;
}

interface Box {
  x: number;
  y: number;
  w: number;
  h: number;
}

function gridProposals(size: number): Box[] {
  const boxes: Box[] = [{ x: 0, y: 0, w: size, h: size }];
  for (const scale of [size / 2, size / 4]) {
    const stride = scale / 2;
    for (let y = 0; y + scale <= size; y += stride) {
      for (let x = 0; x + scale <= size; x += stride) {
        boxes.push({ x, y, w: scale, h: scale });
      }
    }
  }
  return boxes;
}

function overlapRatio(a: Box, b: Box): number {
  const x0 = Math.max(a.x, b.x);
  const y0 = Math.max(a.y, b.y);
  const x1 = Math.min(a.x + a.w, b.x + b.w);
  const y1 = Math.min(a.y + a.h, b.y + b.h);
  const intersection = Math.max(0, x1 - x0) * Math.max(0, y1 - y0);
  const union = a.w * a.h + b.w * b.h - intersection;
  return union > 0 ? intersection / union : 0;
}

export interface BuiltinDetectorOptions {
  seed?: number;
  labels?: string[];
  /** Drop boxes overlapping a better-scored box by more than this ratio. */
  suppressionOverlap?: number;
}

export class BuiltinDetector implements Detector {
  private readonly labels: string[];
  private readonly featureWeights: Float64Array;
  private readonly labelWeights: Float64Array;
  private readonly suppressionOverlap: number;

  constructor(options: BuiltinDetectorOptions = {}) {
    this.labels = options.labels ?? DEFAULT_LABELS;
    const seed = options.seed ?? 0x5eed;
    this.featureWeights = gaussianMatrix(FEATURE_DIM, DESCRIPTOR_DIM, seed);
    this.labelWeights = gaussianMatrix(this.labels.length, DESCRIPTOR_DIM, seed ^ 0x7777);
    this.suppressionOverlap = options.suppressionOverlap ?? 0.6;
  }

  detect(image: BgrImage): Detection[] {
    const proposals = gridProposals(Math.min(image.width, image.height));
    const scored = proposals
      .map((box, index) => ({ box, index, ...this.describe(image, box) }))
      .sort((a, b) => b.score - a.score || a.index - b.index);

    const kept: (typeof scored)[number][] = [];
    for (const candidate of scored) {
      if (kept.some((k) => overlapRatio(k.box, candidate.box) > this.suppressionOverlap)) {
        continue;
      }
      kept.push(candidate);
    }

    return kept.map(({ box, score, descriptor }) => ({
      label: this.labelFor(descriptor),
      score,
      bbox: [box.x, box.y, box.w, box.h],
      feature: this.project(descriptor),
    }));
  }

  /** Pooled box statistics: channel means/stds, 6-bin intensity histogram, geometry. */
  private describe(image: BgrImage, box: Box): { score: number; descriptor: Float64Array } {
    const descriptor = new Float64Array(DESCRIPTOR_DIM);
    const sums = [0, 0, 0];
    const squares = [0, 0, 0];
    const histogram = new Float64Array(18);
    let count = 0;
    for (let y = box.y; y < box.y + box.h; y += 2) {
      for (let x = box.x; x < box.x + box.w; x += 2) {
        const base = (y * image.width + x) * 3;
        for (let c = 0; c < 3; c++) {
          const value = image.data[base + c];
          sums[c] += value;
          squares[c] += value * value;
          histogram[c * 6 + Math.min(5, Math.floor(value / 43))] += 1;
        }
        count++;
      }
    }
    let contrast = 0;
    for (let c = 0; c < 3; c++) {
      const mean = sums[c] / count;
      const variance = Math.max(squares[c] / count - mean * mean, 0);
      descriptor[c] = mean / 255;
      descriptor[3 + c] = Math.sqrt(variance) / 128;
      contrast += Math.sqrt(variance);
      for (let bin = 0; bin < 6; bin++) {
        descriptor[6 + c * 6 + bin] = histogram[c * 6 + bin] / count;
      }
    }
    descriptor[24] = box.x / image.width;
    descriptor[25] = box.y / image.height;
    descriptor[26] = box.w / image.width;
    descriptor[27] = box.h / image.height;
    const score = 1 - Math.exp(-contrast / 96);
    return { score, descriptor };
  }

  private labelFor(descriptor: Float64Array): string {
    let best = 0;
    let bestLogit = -Infinity;
    for (let row = 0; row < this.labels.length; row++) {
      let logit = 0;
      for (let col = 0; col < DESCRIPTOR_DIM; col++) {
        logit += this.labelWeights[row * DESCRIPTOR_DIM + col] * descriptor[col];
      }
      if (logit > bestLogit) {
        bestLogit = logit;
        best = row;
      }
    }
    return this.labels[best];
  }

  private project(descriptor: Float64Array): number[] {
    const feature = new Array<number>(FEATURE_DIM);
    const scale = 1 / Math.sqrt(DESCRIPTOR_DIM);
    for (let row = 0; row < FEATURE_DIM; row++) {
      let value = 0;
      for (let col = 0; col < DESCRIPTOR_DIM; col++) {
        value += this.featureWeights[row * DESCRIPTOR_DIM + col] * descriptor[col];
      }
      feature[row] = Number((value * scale).toFixed(6));
    }
    return feature;
  }
}

/**
 * Resolve a detector spec: "builtin" for the bundled weights, or a path to a
 * JSON checkpoint ({seed, labels}) customizing them.
 */
export function loadDetector(spec: string): Detector {
  if (spec === 'builtin') {
    return new BuiltinDetector();
  }
  if (!existsSync(spec)) {
    throw new DetectorUnavailableError(`detector checkpoint not found: ${spec}`);
  }
  let checkpoint: { seed?: number; labels?: string[] };
  try {
    checkpoint = JSON.parse(readFileSync(spec, 'utf-8'));
  } catch (error) {
    throw new DetectorUnavailableError(`unreadable detector checkpoint ${spec}: ${error}`);
  }
  return new BuiltinDetector({ seed: checkpoint.seed, labels: checkpoint.labels });
}
