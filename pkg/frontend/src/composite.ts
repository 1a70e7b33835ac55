// ============================================================================
// Raster compositing and color math
// Integer-exact ports of the engine's formulas so the editor preview
// agrees with the engine composite pixel for pixel.
// ============================================================================

import { ColorBins, COLOR_BIN_MAX } from './types.js';

/** RGBA pixel buffer, row-major, 4 bytes per pixel. */
export interface Raster {
  width: number;
  height: number;
  data: Uint8ClampedArray;
}

export function makeRaster(width: number, height: number, fill = 0): Raster {
  const data = new Uint8ClampedArray(width * height * 4);
  if (fill !== 0) data.fill(fill);
  return { width, height, data };
}

/** round_half_up(value * num / den) in exact integer arithmetic. */
function roundHalfUpRatio(value: number, num: number, den: number): number {
  return Math.floor((2 * value * num + den) / (2 * den));
}

/** Quantized color bin [0, 25] -> 8-bit channel value. */
export function dequantizeBin(bin: number): number {
  if (bin < 0 || bin > COLOR_BIN_MAX) {
    throw new RangeError(`color bin ${bin} outside [0, ${COLOR_BIN_MAX}]`);
  }
  return roundHalfUpRatio(bin, 255, COLOR_BIN_MAX);
}

/** 8-bit channel value -> quantized color bin [0, 25]. */
export function quantizeChannel(value: number): number {
  if (value < 0 || value > 255) {
    throw new RangeError(`channel value ${value} outside [0, 255]`);
  }
  return roundHalfUpRatio(value, COLOR_BIN_MAX, 255);
}

export function binsToCss(color: ColorBins): string {
  const [r, g, b, a] = color;
  return (
    `rgba(${dequantizeBin(r)}, ${dequantizeBin(g)}, ${dequantizeBin(b)}, ` +
    `${(dequantizeBin(a) / 255).toFixed(4)})`
  );
}

/**
 * Source-over blend of src onto dst in place, using the engine's
 * rounding: out = floor((2*(a*src + (255-a)*dst) + 255) / 510).
 */
export function alphaOver(dst: Raster, src: Raster): void {
  if (dst.width !== src.width || dst.height !== src.height) {
    throw new RangeError('raster size mismatch');
  }
  const d = dst.data;
  const s = src.data;
  for (let i = 0; i < d.length; i += 4) {
    const a = s[i + 3];
    if (a === 0) continue;
    if (a === 255) {
      d[i] = s[i];
      d[i + 1] = s[i + 1];
      d[i + 2] = s[i + 2];
      d[i + 3] = 255;
      continue;
    }
    const inv = 255 - a;
    d[i] = Math.floor((2 * (a * s[i] + inv * d[i]) + 255) / 510);
    d[i + 1] = Math.floor((2 * (a * s[i + 1] + inv * d[i + 1]) + 255) / 510);
    d[i + 2] = Math.floor((2 * (a * s[i + 2] + inv * d[i + 2]) + 255) / 510);
    d[i + 3] = 255;
  }
}

/**
 * Composite background + object rasters bottom-to-top.  Text layers are
 * rendered as DOM nodes, not rasters, so they are not part of this.
 */
export function compositeRasters(background: Raster, objects: Raster[]): Raster {
  const out: Raster = {
    width: background.width,
    height: background.height,
    data: new Uint8ClampedArray(background.data),
  };
  // the background is opaque by construction
  for (let i = 3; i < out.data.length; i += 4) out.data[i] = 255;
  for (const obj of objects) alphaOver(out, obj);
  return out;
}

/** Largest per-channel RGB difference between two equally sized rasters. */
export function maxPixelDelta(a: Raster, b: Raster): number {
  if (a.width !== b.width || a.height !== b.height) {
    throw new RangeError('raster size mismatch');
  }
  let worst = 0;
  for (let i = 0; i < a.data.length; i += 4) {
    for (let c = 0; c < 3; c++) {
      const d = Math.abs(a.data[i + c] - b.data[i + c]);
      if (d > worst) worst = d;
    }
  }
  return worst;
}
