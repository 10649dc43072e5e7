/** Image decoding: binary PPM (P6) natively, PNG via pngjs. */

import { readFileSync } from 'node:fs';
import { extname } from 'node:path';
import { PNG } from 'pngjs';

export interface RgbImage {
  width: number;
  height: number;
  /** Interleaved RGB bytes, row-major. */
  data: Uint8Array;
}

export function decodePpm(buffer: Buffer): RgbImage {
  // header: "P6" <width> <height> <maxval> followed by a single whitespace byte
  let offset = 0;
  const readToken = (): string => {
    while (offset < buffer.length && isWhitespace(buffer[offset])) {
      if (buffer[offset] === 0x23 /* # */) skipComment();
      offset++;
    }
    if (buffer[offset] === 0x23) {
      skipComment();
      return readToken();
    }
    const start = offset;
    while (offset < buffer.length && !isWhitespace(buffer[offset])) offset++;
    return buffer.toString('ascii', start, offset);
  };
  const skipComment = () => {
    while (offset < buffer.length && buffer[offset] !== 0x0a) offset++;
  };
  const isWhitespace = (byte: number) => byte === 0x20 || byte === 0x09 || byte === 0x0a || byte === 0x0d;

  const magic = readToken();
  if (magic !== 'P6') {
    throw new Error(`unsupported PPM magic ${JSON.stringify(magic)}, expected P6`);
  }
  const width = Number(readToken());
  const height = Number(readToken());
  const maxval = Number(readToken());
  if (!Number.isInteger(width) || !Number.isInteger(height) || width <= 0 || height <= 0) {
    throw new Error('invalid PPM dimensions');
  }
  if (maxval !== 255) {
    throw new Error(`unsupported PPM maxval ${maxval}, expected 255`);
  }
  offset++; // the single whitespace after maxval
  const expected = width * height * 3;
  if (buffer.length < offset + expected) {
    throw new Error('truncated PPM pixel data');
  }
  return { width, height, data: new Uint8Array(buffer.subarray(offset, offset + expected)) };
}

export function encodePpm(image: RgbImage): Buffer {
  const header = Buffer.from(`P6\n${image.width} ${image.height}\n255\n`, 'ascii');
  return Buffer.concat([header, Buffer.from(image.data)]);
}

export function decodePng(buffer: Buffer): RgbImage {
  const png = PNG.sync.read(buffer);
  const data = new Uint8Array(png.width * png.height * 3);
  for (let i = 0; i < png.width * png.height; i++) {
    data[i * 3] = png.data[i * 4];
    data[i * 3 + 1] = png.data[i * 4 + 1];
    data[i * 3 + 2] = png.data[i * 4 + 2];
  }
  return { width: png.width, height: png.height, data };
}

export const SUPPORTED_EXTENSIONS = ['.ppm', '.png'];

export function loadImage(path: string): RgbImage {
  const buffer = readFileSync(path);
  const extension = extname(path).toLowerCase();
  if (extension === '.ppm') return decodePpm(buffer);
  if (extension === '.png') return decodePng(buffer);
  throw new Error(`unsupported image extension ${extension} (${path})`);
}
