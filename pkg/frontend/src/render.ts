// ============================================================================
// DOM rendering
// Layers render as a positioned stack: <img> for rasters, live text
// nodes for text layers so the preview stays selectable and editable.
// ============================================================================

import { BundleApi } from './api.js';
import { binsToCss } from './composite.js';
import { EditorState } from './state.js';
import { Layer, TextLayer } from './types.js';

export interface Elements {
  stage: HTMLElement;
  layerList: HTMLElement;
  inspector: HTMLElement;
  banner: HTMLElement;
}

export function showError(banner: HTMLElement, message: string): void {
  banner.textContent = message;
  banner.classList.toggle('hidden', message.length === 0);
}

export function renderStage(stage: HTMLElement, state: EditorState, api: BundleApi): void {
  const { width, height } = state.manifest.canvas;
  stage.style.width = `${width}px`;
  stage.style.height = `${height}px`;
  stage.replaceChildren();
  for (const { layer, index } of state.visibleLayers()) {
    stage.appendChild(layerNode(layer, index, state, api));
  }
}

function layerNode(layer: Layer, index: number, state: EditorState, api: BundleApi): HTMLElement {
  if (layer.kind === 'text') {
    return textNode(layer, index, state);
  }
  const img = document.createElement('img');
  img.className = `layer-${layer.kind}`;
  img.dataset.index = String(index);
  img.src = api.layerUrl(layer.file);
  img.draggable = false;
  Object.assign(img.style, {
    position: 'absolute',
    left: '0',
    top: '0',
    width: '100%',
    height: '100%',
  });
  return img;
}

function textNode(layer: TextLayer, index: number, state: EditorState): HTMLElement {
  const [x1, y1, x2, y2] = layer.box;
  const div = document.createElement('div');
  div.className = 'layer-text';
  div.dataset.index = String(index);
  div.textContent = layer.content;
  Object.assign(div.style, {
    position: 'absolute',
    left: `${x1}px`,
    top: `${y1}px`,
    width: `${x2 - x1}px`,
    height: `${y2 - y1}px`,
    color: binsToCss(layer.color),
    fontFamily: layer.font,
    textAlign: layer.alignment,
    // CSS rotates clockwise for positive angles; the engine rotates
    // counter-clockwise, hence the sign flip
    transform: `rotate(${-layer.angle}deg)`,
    transformOrigin: 'center center',
    display: 'flex',
    alignItems: 'center',
    justifyContent:
      layer.alignment === 'left' ? 'flex-start'
        : layer.alignment === 'right' ? 'flex-end' : 'center',
    outline: state.selection === index ? '2px dashed #4a90d9' : 'none',
    cursor: 'move',
    whiteSpace: 'pre-wrap',
  });
  return div;
}

export function renderLayerList(
  list: HTMLElement,
  state: EditorState,
  onAction: (action: string, index: number) => void,
): void {
  list.replaceChildren();
  // display top-of-stack first, like every layers panel
  const rows = state.manifest.layers
    .map((layer, index) => ({ layer, index }))
    .reverse();
  for (const { layer, index } of rows) {
    const row = document.createElement('div');
    row.className = 'layer-row' + (state.selection === index ? ' selected' : '');
    row.dataset.index = String(index);

    const eye = document.createElement('input');
    eye.type = 'checkbox';
    eye.checked = state.visibility[index];
    eye.title = 'visible';
    eye.addEventListener('change', () => onAction('toggle', index));

    const name = document.createElement('span');
    name.className = 'layer-name';
    name.textContent =
      layer.kind === 'text' ? `text: ${layer.content.slice(0, 24)}` : layer.kind;
    name.addEventListener('click', () => onAction('select', index));

    const up = document.createElement('button');
    up.textContent = '↑';
    up.title = 'raise';
    up.addEventListener('click', () => onAction('raise', index));

    const down = document.createElement('button');
    down.textContent = '↓';
    down.title = 'lower';
    down.addEventListener('click', () => onAction('lower', index));

    row.append(eye, name, up, down);
    list.appendChild(row);
  }
}

export function renderInspector(
  inspector: HTMLElement,
  state: EditorState,
  onEdit: (field: string, value: string) => void,
): void {
  inspector.replaceChildren();
  const index = state.selection;
  if (index === null) {
    inspector.textContent = 'Select a layer to edit.';
    return;
  }
  const layer = state.manifest.layers[index];
  if (layer.kind !== 'text') {
    inspector.textContent = `${layer.kind} layer (drag on the canvas to move).`;
    return;
  }
  const fields: [string, string][] = [
    ['content', layer.content],
    ['color', layer.color.join(',')],
    ['font', layer.font],
    ['alignment', layer.alignment],
    ['lines', String(layer.lines)],
    ['angle', String(layer.angle)],
  ];
  for (const [field, value] of fields) {
    const label = document.createElement('label');
    label.textContent = field;
    const input = document.createElement('input');
    input.name = field;
    input.value = value;
    input.addEventListener('change', () => onEdit(field, input.value));
    label.appendChild(input);
    inspector.appendChild(label);
  }
}
