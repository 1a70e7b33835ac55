// ============================================================================
// Bundle manifest schema
// Mirrors the JSON the engine writes to manifest.json and serves over
// /api/bundle/manifest.  The editor never invents fields; it only edits
// the ones listed here.
// ============================================================================

export type Alignment = 'left' | 'center' | 'right';

/** RGBA color as four quantized bins, each in [0, 25]. */
export type ColorBins = [number, number, number, number];

/** Pixel-space box [x1, y1, x2, y2] with x1 < x2 and y1 < y2. */
export type Box = [number, number, number, number];

export interface BackgroundLayer {
  kind: 'background';
  file: string;
}

export interface ObjectLayer {
  kind: 'object';
  file: string;
  mask: string;
  box: Box;
  z: number;
}

export interface TextLayer {
  kind: 'text';
  box: Box;
  content: string;
  color: ColorBins;
  font: string;
  alignment: Alignment;
  lines: number;
  angle: number;
}

export type Layer = BackgroundLayer | ObjectLayer | TextLayer;

export interface Manifest {
  format_version: number;
  canvas: { width: number; height: number };
  layers: Layer[];
  checksums?: Record<string, string>;
}

/** Editable attributes of a text layer. */
export type TextEdit = Partial<
  Pick<TextLayer, 'content' | 'color' | 'font' | 'alignment' | 'lines' | 'angle' | 'box'>
>;

export const COLOR_BIN_MAX = 25;
export const ALIGNMENTS: readonly Alignment[] = ['left', 'center', 'right'];
export const BUNDLE_FORMAT_VERSION = 1;
