/** Detector input preprocessing: bilinear resize to 224x224 and RGB -> BGR. */

import type { RgbImage } from './image.js';

export const TARGET_SIZE = 224;

export interface BgrImage {
  width: number;
  height: number;
  /** Interleaved BGR values in [0, 255], row-major. */
  data: Float32Array;
}

export function resizeBilinear(image: RgbImage, width: number, height: number): RgbImage {
  const out = new Uint8Array(width * height * 3);
  const scaleX = image.width / width;
  const scaleY = image.height / height;
  for (let y = 0; y < height; y++) {
    const srcY = Math.min((y + 0.5) * scaleY - 0.5, image.height - 1);
    const y0 = Math.max(Math.floor(srcY), 0);
    const y1 = Math.min(y0 + 1, image.height - 1);
    const fy = srcY - y0;
    for (let x = 0; x < width; x++) {
      const srcX = Math.min((x + 0.5) * scaleX - 0.5, image.width - 1);
      const x0 = Math.max(Math.floor(srcX), 0);
      const x1 = Math.min(x0 + 1, image.width - 1);
      const fx = srcX - x0;
      for (let c = 0; c < 3; c++) {
        const p00 = image.data[(y0 * image.width + x0) * 3 + c];
        const p01 = image.data[(y0 * image.width + x1) * 3 + c];
        const p10 = image.data[(y1 * image.width + x0) * 3 + c];
        const p11 = image.data[(y1 * image.width + x1) * 3 + c];
        const top = p00 + (p01 - p00) * fx;
        const bottom = p10 + (p11 - p10) * fx;
        out[(y * width + x) * 3 + c] = Math.round(top + (bottom - top) * fy);
      }
    }
  }
  return { width, height, data: out };
}

export function toBgr(image: RgbImage): BgrImage {
  const data = new Float32Array(image.width * image.height * 3);
  for (let i = 0; i < image.width * image.height; i++) {
    data[i * 3] = image.data[i * 3 + 2];
    data[i * 3 + 1] = image.data[i * 3 + 1];
    data[i * 3 + 2] = image.data[i * 3];
  }
  return { width: image.width, height: image.height, data };
}

/** Resize to the detector's square input and convert channel order. */
export function preprocess(image: RgbImage): BgrImage {
  return toBgr(resizeBilinear(image, TARGET_SIZE, TARGET_SIZE));
}
