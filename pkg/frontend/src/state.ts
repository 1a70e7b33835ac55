// ============================================================================
// Editor state and edit operations
// Pure data layer: every operation validates, records undo history, and
// marks the state dirty.  No DOM access here, which keeps it testable.
// ============================================================================

import {
  ALIGNMENTS,
  COLOR_BIN_MAX,
  Layer,
  Manifest,
  TextEdit,
  TextLayer,
} from './types.js';

export const UNDO_DEPTH = 100;

export class EditError extends Error {
  constructor(
    public code: string,
    message: string,
  ) {
    super(message);
    this.name = 'EditError';
  }
}

function cloneManifest(manifest: Manifest): Manifest {
  return JSON.parse(JSON.stringify(manifest)) as Manifest;
}

export class EditorState {
  manifest: Manifest;
  /** Per-layer preview visibility, parallel to manifest.layers. */
  visibility: boolean[];
  selection: number | null = null;
  dirty = false;
  private undoStack: Manifest[] = [];

  constructor(manifest: Manifest) {
    this.manifest = cloneManifest(manifest);
    this.visibility = manifest.layers.map(() => true);
  }

  get undoDepth(): number {
    return this.undoStack.length;
  }

  /** Layers to render, in manifest order, filtered by visibility. */
  visibleLayers(): { layer: Layer; index: number }[] {
    return this.manifest.layers
      .map((layer, index) => ({ layer, index }))
      .filter(({ index }) => this.visibility[index]);
  }

  select(index: number | null): void {
    if (index !== null && (index < 0 || index >= this.manifest.layers.length)) {
      throw new EditError('bad_index', `no layer ${index}`);
    }
    this.selection = index;
  }

  toggleVisibility(index: number): void {
    this.assertIndex(index);
    // preview-only: not an edit, so no undo entry and no dirty flag
    this.visibility[index] = !this.visibility[index];
  }

  editText(index: number, edit: TextEdit): void {
    this.assertIndex(index);
    const layer = this.manifest.layers[index];
    if (layer.kind !== 'text') {
      throw new EditError('not_text', `layer ${index} is ${layer.kind}`);
    }
    validateTextEdit(edit);
    this.pushUndo();
    Object.assign(layer, edit);
    this.dirty = true;
  }

  /** Translate a layer's box by (dx, dy), clamped to the canvas. */
  moveLayer(index: number, dx: number, dy: number): void {
    this.assertIndex(index);
    const layer = this.manifest.layers[index];
    if (layer.kind === 'background') {
      throw new EditError('not_movable', 'background cannot move');
    }
    const { width, height } = this.manifest.canvas;
    const [x1, y1, x2, y2] = layer.box;
    const w = x2 - x1;
    const h = y2 - y1;
    const nx1 = Math.min(Math.max(x1 + dx, 0), width - w);
    const ny1 = Math.min(Math.max(y1 + dy, 0), height - h);
    this.pushUndo();
    layer.box = [nx1, ny1, nx1 + w, ny1 + h];
    this.dirty = true;
  }

  /**
   * Move a layer to a new stack position.  The background stays first
   * and texts stay above objects; violating moves are rejected.
   */
  reorder(from: number, to: number): void {
    this.assertIndex(from);
    this.assertIndex(to);
    if (from === to) return;
    const layers = this.manifest.layers.slice();
    const [moved] = layers.splice(from, 1);
    layers.splice(to, 0, moved);
    const reason = stackingViolation(layers);
    if (reason !== null) {
      throw new EditError('stacking', reason);
    }
    this.pushUndo();
    const vis = this.visibility.slice();
    const [movedVis] = vis.splice(from, 1);
    vis.splice(to, 0, movedVis);
    this.manifest.layers = layers;
    this.visibility = vis;
    this.selection = to;
    this.dirty = true;
  }

  undo(): boolean {
    const prev = this.undoStack.pop();
    if (prev === undefined) return false;
    this.manifest = prev;
    if (this.visibility.length !== prev.layers.length) {
      this.visibility = prev.layers.map(() => true);
    }
    this.dirty = this.undoStack.length > 0;
    return true;
  }

  /** Called after a successful save: the manifest is now persisted. */
  markSaved(): void {
    this.dirty = false;
    this.undoStack = [];
  }

  private pushUndo(): void {
    this.undoStack.push(cloneManifest(this.manifest));
    if (this.undoStack.length > UNDO_DEPTH) {
      this.undoStack.shift();
    }
  }

  private assertIndex(index: number): void {
    if (index < 0 || index >= this.manifest.layers.length) {
      throw new EditError('bad_index', `no layer ${index}`);
    }
  }
}

/** null when the order is legal, otherwise a human-readable reason. */
export function stackingViolation(layers: Layer[]): string | null {
  if (layers.length === 0 || layers[0].kind !== 'background') {
    return 'the background must stay at the bottom of the stack';
  }
  let seenText = false;
  for (const layer of layers) {
    if (layer.kind === 'text') {
      seenText = true;
    } else if (seenText) {
      return 'text layers must stay above object layers';
    }
  }
  return null;
}

function validateTextEdit(edit: TextEdit): void {
  if (edit.color !== undefined) {
    const bad = edit.color.length !== 4
      || edit.color.some((c) => !Number.isInteger(c) || c < 0 || c > COLOR_BIN_MAX);
    if (bad) {
      throw new EditError('color_bin_range', `color bins must be integers in [0, ${COLOR_BIN_MAX}]`);
    }
  }
  if (edit.content !== undefined && edit.content.length === 0) {
    throw new EditError('content_empty', 'text content cannot be empty');
  }
  if (edit.alignment !== undefined && !ALIGNMENTS.includes(edit.alignment)) {
    throw new EditError('bad_alignment', `alignment must be one of ${ALIGNMENTS.join(', ')}`);
  }
  if (edit.lines !== undefined && (!Number.isInteger(edit.lines) || edit.lines < 1)) {
    throw new EditError('lines_invalid', 'line count must be a positive integer');
  }
  if (edit.angle !== undefined
      && (!Number.isInteger(edit.angle) || edit.angle < -180 || edit.angle > 180)) {
    throw new EditError('angle_range', 'angle must be an integer in [-180, 180]');
  }
  if (edit.box !== undefined && !(edit.box[0] < edit.box[2] && edit.box[1] < edit.box[3])) {
    throw new EditError('box_degenerate', 'box must have positive width and height');
  }
}

/** Extract the text layers with their stack indices. */
export function textLayers(manifest: Manifest): { layer: TextLayer; index: number }[] {
  const out: { layer: TextLayer; index: number }[] = [];
  manifest.layers.forEach((layer, index) => {
    if (layer.kind === 'text') out.push({ layer, index });
  });
  return out;
}
