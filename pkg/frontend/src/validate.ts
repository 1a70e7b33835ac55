// ============================================================================
// Client-side manifest validation
// Mirrors the engine's server-side checks so most mistakes are caught
// before a PUT ever leaves the browser.  The server remains authoritative.
// ============================================================================

import {
  ALIGNMENTS,
  BUNDLE_FORMAT_VERSION,
  COLOR_BIN_MAX,
  Manifest,
  TextLayer,
} from './types.js';

export interface Violation {
  code: string;
  detail: string;
}

function isInt(v: unknown): v is number {
  return typeof v === 'number' && Number.isInteger(v);
}

/**
 * Validate a manifest against the engine's invariants.  File existence
 * cannot be checked client-side and is left to the server.
 */
export function validateManifest(manifest: Manifest): Violation[] {
  const violations: Violation[] = [];
  const bad = (code: string, detail: string) => violations.push({ code, detail });

  if (manifest.format_version !== BUNDLE_FORMAT_VERSION) {
    bad('bundle_bad_version', String(manifest.format_version));
  }
  const canvas = manifest.canvas ?? ({} as Manifest['canvas']);
  if (!isInt(canvas.width) || canvas.width < 1 || !isInt(canvas.height) || canvas.height < 1) {
    bad('bad_canvas', JSON.stringify(canvas));
  }

  const layers = manifest.layers ?? [];
  if (layers.length === 0 || layers[0].kind !== 'background') {
    bad('background_not_first', 'background must be the first layer');
  }

  let seenText = false;
  layers.forEach((layer, i) => {
    const where = `layer ${i}`;
    if (layer.kind === 'background' && i !== 0) {
      bad('multiple_backgrounds', where);
    }
    if (layer.kind === 'background' || layer.kind === 'object') {
      if (seenText) {
        bad('text_below_object', where);
      }
      return;
    }
    if (layer.kind === 'text') {
      seenText = true;
      validateText(layer, where, bad);
      return;
    }
    bad('bundle_bad_layer', `${where}: ${(layer as { kind?: string }).kind}`);
  });
  return violations;
}

function validateText(
  layer: TextLayer,
  where: string,
  bad: (code: string, detail: string) => void,
): void {
  const box = layer.box ?? [];
  if (box.length !== 4 || !(box[0] < box[2] && box[1] < box[3])) {
    bad('box_degenerate', `${where}: ${JSON.stringify(box)}`);
  }
  const color = layer.color ?? [];
  if (color.length !== 4 || color.some((c) => !isInt(c) || c < 0 || c > COLOR_BIN_MAX)) {
    bad('color_bin_range', `${where}: ${JSON.stringify(color)}`);
  }
  if (!layer.content) {
    bad('content_empty', where);
  }
  if (!ALIGNMENTS.includes(layer.alignment)) {
    bad('bad_alignment', `${where}: ${layer.alignment}`);
  }
  if (!isInt(layer.lines) || layer.lines < 1) {
    bad('lines_invalid', `${where}: ${layer.lines}`);
  }
  if (!isInt(layer.angle) || layer.angle < -180 || layer.angle > 180) {
    bad('angle_range', `${where}: ${layer.angle}`);
  }
}
