#!/usr/bin/env node
/** CLI: kvqa-export --images DIR --out FILE [--max-objects N] [--score-floor F] [--detector SPEC] */

import { exportAttributes } from './export.js';
import { DetectorUnavailableError } from './detector.js';

function parseArgs(argv: string[]): Record<string, string> {
  const args: Record<string, string> = {};
  for (let i = 0; i < argv.length; i += 2) {
    const key = argv[i];
    const value = argv[i + 1];
    if (!key.startsWith('--') || value === undefined) {
      throw new Error(`expected "--flag value" pairs, got ${key}`);
    }
    args[key.slice(2)] = value;
  }
  return args;
}

function main(): number {
  try {
    const args = parseArgs(process.argv.slice(2));
    if (!args.images || !args.out) {
      console.error(
        'usage: kvqa-export --images DIR --out FILE [--max-objects N] [--min-objects N] ' +
          '[--score-floor F] [--detector builtin|checkpoint.json]',
      );
      return 2;
    }
    const entries = exportAttributes({
      imagesDir: args.images,
      outPath: args.out,
      maxObjects: args['max-objects'] ? Number(args['max-objects']) : undefined,
      minObjectsWarning: args['min-objects'] ? Number(args['min-objects']) : undefined,
      scoreFloor: args['score-floor'] ? Number(args['score-floor']) : undefined,
      detector: args.detector,
    });
    const total = entries.reduce((n, e) => n + e.objects.length, 0);
    console.log(`exported ${total} objects across ${entries.length} images to ${args.out}`);
    return 0;
  } catch (error) {
    if (error instanceof DetectorUnavailableError) {
      console.error(`detector unavailable: ${error.message}`);
    } else {
      console.error(`error: ${error instanceof Error ? error.message : error}`);
    }
    return 1;
  }
}

process.exit(main());
