/** Strict schema validation mirroring the pipeline's attribute loader. */

import { FEATURE_DIM } from './detector.js';
import type { AttributeEntry } from './export.js';

export function validateAttributeEntries(entries: AttributeEntry[]): void {
  if (!Array.isArray(entries)) {
    throw new Error('attribute payload must be an array');
  }
  for (const entry of entries) {
    if (!Number.isInteger(entry.image_id)) {
      throw new Error(`image_id must be an integer, got ${entry.image_id}`);
    }
    if (!Array.isArray(entry.objects) || entry.objects.length === 0) {
      throw new Error(`image ${entry.image_id} has an empty object list`);
    }
    for (const object of entry.objects) {
      if (typeof object.label !== 'string' || object.label.length === 0) {
        throw new Error(`image ${entry.image_id} has an object without a label`);
      }
      if (!(object.score >= 0 && object.score <= 1)) {
        throw new Error(`image ${entry.image_id} object ${object.label} score ${object.score} outside [0,1]`);
      }
      if (object.bbox.length !== 4 || object.bbox[2] <= 0 || object.bbox[3] <= 0) {
        throw new Error(`image ${entry.image_id} object ${object.label} has a degenerate box`);
      }
      if (object.feature.length !== FEATURE_DIM) {
        throw new Error(
          `image ${entry.image_id} object ${object.label} feature length ` +
            `${object.feature.length} != ${FEATURE_DIM}`,
        );
      }
      if (!object.feature.every((v) => Number.isFinite(v))) {
        throw new Error(`image ${entry.image_id} object ${object.label} has non-finite features`);
      }
    }
  }
}
