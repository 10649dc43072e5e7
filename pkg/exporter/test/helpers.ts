/** Synthetic sample images for exporter tests. */

import { mkdtempSync, writeFileSync } from 'node:fs';
import { tmpdir } from 'node:os';
import { join } from 'node:path';
import { PNG } from 'pngjs';
import { encodePpm, type RgbImage } from '../src/image.js';

export function makeImage(
  width: number,
  height: number,
  pixel: (x: number, y: number) => [number, number, number],
): RgbImage {
  const data = new Uint8Array(width * height * 3);
  for (let y = 0; y < height; y++) {
    for (let x = 0; x < width; x++) {
      const [r, g, b] = pixel(x, y);
      const base = (y * width + x) * 3;
      data[base] = r;
      data[base + 1] = g;
      data[base + 2] = b;
    }
  }
  return { width, height, data };
}

export function gradientImage(width = 320, height = 240): RgbImage {
  return makeImage(width, height, (x, y) => [
    Math.floor((255 * x) / width),
    Math.floor((255 * y) / height),
    128,
  ]);
}

export function checkerboardImage(width = 256, height = 256, cell = 16): RgbImage {
  return makeImage(width, height, (x, y) =>
    (Math.floor(x / cell) + Math.floor(y / cell)) % 2 === 0 ? [230, 230, 230] : [25, 25, 25],
  );
}

export function blobsImage(width = 300, height = 200): RgbImage {
  const centers: Array<[number, number, [number, number, number]]> = [
    [70, 60, [220, 40, 40]],
    [200, 100, [40, 220, 40]],
    [120, 150, [40, 40, 220]],
  ];
  return makeImage(width, height, (x, y) => {
    for (const [cx, cy, color] of centers) {
      if ((x - cx) ** 2 + (y - cy) ** 2 < 40 ** 2) return color;
    }
    return [245, 245, 235];
  });
}

export function encodePng(image: RgbImage): Buffer {
  const png = new PNG({ width: image.width, height: image.height });
  for (let i = 0; i < image.width * image.height; i++) {
    png.data[i * 4] = image.data[i * 3];
    png.data[i * 4 + 1] = image.data[i * 3 + 1];
    png.data[i * 4 + 2] = image.data[i * 3 + 2];
    png.data[i * 4 + 3] = 255;
  }
  return PNG.sync.write(png);
}

/** Three sample images on disk, named so their ids are 101, 102, 103. */
export function sampleImageDir(): string {
  const dir = mkdtempSync(join(tmpdir(), 'kvqa-export-'));
  writeFileSync(join(dir, '101.ppm'), encodePpm(gradientImage()));
  writeFileSync(join(dir, '102.ppm'), encodePpm(checkerboardImage()));
  writeFileSync(join(dir, '103.png'), encodePng(blobsImage()));
  return dir;
}
