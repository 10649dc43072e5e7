/** Batch export: images in, attribute JSON out, in the pipeline's schema. */

import { createHash } from 'node:crypto';
import { readdirSync, writeFileSync } from 'node:fs';
import { basename, extname, join } from 'node:path';
import { loadDetector, type Detection, type Detector } from './detector.js';
import { loadImage, SUPPORTED_EXTENSIONS } from './image.js';
import { preprocess } from './preprocess.js';

export interface ExportConfig {
  imagesDir: string;
  outPath: string;
  /** Per-image cap on exported objects, best scores first. */
  maxObjects?: number;
  /** Images with fewer objects than this are flagged, not rejected. */
  minObjectsWarning?: number;
  /** Detections scoring below this are dropped before the cap. */
  scoreFloor?: number;
  /** "builtin" or a checkpoint path for loadDetector. */
  detector?: string;
}

export interface AttributeObject {
  label: string;
  score: number;
  bbox: number[];
  feature: number[];
}

export interface AttributeEntry {
  image_id: number;
  objects: AttributeObject[];
}

export const DEFAULT_MAX_OBJECTS = 100;
export const DEFAULT_MIN_OBJECTS = 10;

/** Numeric file stems become ids directly; anything else hashes to one. */
export function imageIdFor(filename: string): number {
  const stem = basename(filename, extname(filename));
  const digits = stem.match(/\d+/);
  if (digits) {
    return Number.parseInt(digits[0], 10);
  }
  const hash = createHash('md5').update(stem).digest();
  return hash.readUInt32BE(0);
}

function toEntry(filename: string, detections: Detection[], cfg: Required<Pick<ExportConfig, 'maxObjects' | 'minObjectsWarning' | 'scoreFloor'>>): AttributeEntry {
  const objects = detections
    .filter((d) => d.score >= cfg.scoreFloor)
    .sort((a, b) => b.score - a.score)
    .slice(0, cfg.maxObjects)
    .map((d) => ({
      label: d.label,
      score: Number(d.score.toFixed(6)),
      bbox: d.bbox.map((v) => Number(v.toFixed(2))),
      feature: d.feature,
    }));
  if (objects.length < cfg.minObjectsWarning) {
    console.warn(
      `warning: ${filename} produced ${objects.length} objects, below the usual minimum of ${cfg.minObjectsWarning}`,
    );
  }
  return { image_id: imageIdFor(filename), objects };
}

export function listImageFiles(imagesDir: string): string[] {
  return readdirSync(imagesDir)
    .filter((name) => SUPPORTED_EXTENSIONS.includes(extname(name).toLowerCase()))
    .sort();
}

export function exportAttributes(config: ExportConfig): AttributeEntry[] {
  const detector: Detector = loadDetector(config.detector ?? 'builtin');
  const cfg = {
    maxObjects: config.maxObjects ?? DEFAULT_MAX_OBJECTS,
    minObjectsWarning: config.minObjectsWarning ?? DEFAULT_MIN_OBJECTS,
    scoreFloor: config.scoreFloor ?? 0,
  };
  if (cfg.maxObjects < cfg.minObjectsWarning || cfg.minObjectsWarning < 1) {
    throw new Error(
      `invalid object bounds: max ${cfg.maxObjects} must be >= min ${cfg.minObjectsWarning} >= 1`,
    );
  }
  const files = listImageFiles(config.imagesDir);
  if (files.length === 0) {
    throw new Error(`no ${SUPPORTED_EXTENSIONS.join("/")} images found in ${config.imagesDir}`);
  }
  const entries = files.map((name) => {
    const image = loadImage(join(config.imagesDir, name));
    const detections = detector.detect(preprocess(image));
    return toEntry(name, detections, cfg);
  });
  writeFileSync(config.outPath, JSON.stringify(entries, null, 2) + '\n', 'utf-8');
  return entries;
}
