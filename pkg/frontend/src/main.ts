// ============================================================================
// Application wiring
// Loads the bundle, connects state to the DOM, and handles save/undo.
// ============================================================================

import { ApiError, BundleApi } from './api.js';
import { renderInspector, renderLayerList, renderStage, showError } from './render.js';
import { EditError, EditorState } from './state.js';
import { ColorBins, TextEdit } from './types.js';
import { validateManifest } from './validate.js';

function parseEdit(field: string, value: string): TextEdit {
  switch (field) {
    case 'content':
      return { content: value };
    case 'color': {
      const bins = value.split(',').map((v) => Number(v.trim()));
      return { color: bins as ColorBins };
    }
    case 'font':
      return { font: value };
    case 'alignment':
      return { alignment: value as TextEdit['alignment'] };
    case 'lines':
      return { lines: Number(value) };
    case 'angle':
      return { angle: Number(value) };
    default:
      throw new EditError('bad_field', `unknown field ${field}`);
  }
}

export async function startEditor(root: Document = document): Promise<void> {
  const api = new BundleApi();
  const stage = root.getElementById('stage')!;
  const layerList = root.getElementById('layer-list')!;
  const inspector = root.getElementById('inspector')!;
  const banner = root.getElementById('banner')!;
  const saveButton = root.getElementById('save')! as HTMLButtonElement;
  const undoButton = root.getElementById('undo')! as HTMLButtonElement;

  let state: EditorState;
  try {
    const manifest = await api.getManifest();
    const violations = validateManifest(manifest);
    if (violations.length > 0) {
      showError(banner, `invalid bundle: ${violations.map((v) => v.code).join(', ')}`);
      return;
    }
    state = new EditorState(manifest);
  } catch (err) {
    showError(banner, `failed to load bundle: ${(err as Error).message}`);
    return;
  }

  const redraw = () => {
    renderStage(stage, state, api);
    renderLayerList(layerList, state, handleAction);
    renderInspector(inspector, state, handleEdit);
    saveButton.disabled = !state.dirty;
    root.title = state.dirty ? '* layer editor' : 'layer editor';
  };

  const guard = (fn: () => void) => {
    try {
      showError(banner, '');
      fn();
    } catch (err) {
      if (err instanceof EditError) {
        showError(banner, err.message);
      } else {
        throw err;
      }
    }
    redraw();
  };

  function handleAction(action: string, index: number): void {
    guard(() => {
      if (action === 'select') state.select(index);
      else if (action === 'toggle') state.toggleVisibility(index);
      else if (action === 'raise') state.reorder(index, index + 1);
      else if (action === 'lower') state.reorder(index, index - 1);
    });
  }

  function handleEdit(field: string, value: string): void {
    guard(() => {
      if (state.selection !== null) {
        state.editText(state.selection, parseEdit(field, value));
      }
    });
  }

  undoButton.addEventListener('click', () => guard(() => void state.undo()));

  saveButton.addEventListener('click', async () => {
    const violations = validateManifest(state.manifest);
    if (violations.length > 0) {
      showError(banner, `fix before saving: ${violations.map((v) => v.code).join(', ')}`);
      return;
    }
    try {
      await api.putManifest(state.manifest);
      state.markSaved();
      showError(banner, '');
    } catch (err) {
      if (err instanceof ApiError && err.status === 422) {
        showError(banner, `server rejected: ${err.violations.map((v) => v.code).join(', ')}`);
      } else {
        showError(banner, `save failed: ${(err as Error).message}`);
      }
    }
    redraw();
  });

  // drag-to-move on the stage for the selected non-background layer
  let drag: { x: number; y: number } | null = null;
  stage.addEventListener('pointerdown', (ev) => {
    const target = ev.target as HTMLElement;
    if (target.dataset.index !== undefined) {
      state.select(Number(target.dataset.index));
      redraw();
    }
    drag = { x: ev.clientX, y: ev.clientY };
  });
  stage.addEventListener('pointerup', (ev) => {
    if (drag === null || state.selection === null) {
      drag = null;
      return;
    }
    const dx = Math.round(ev.clientX - drag.x);
    const dy = Math.round(ev.clientY - drag.y);
    drag = null;
    if (dx === 0 && dy === 0) return;
    const layer = state.manifest.layers[state.selection];
    if (layer.kind === 'background') return;
    guard(() => state.moveLayer(state.selection!, dx, dy));
  });

  redraw();
}

if (typeof document !== 'undefined' && document.getElementById('stage')) {
  void startEditor();
}
