// ============================================================================
// Test helpers
// An in-memory bundle server with the same semantics as the engine's
// HTTP surface: GET/PUT manifest, GET layer files.  PUT validates and
// rewrites manifest.json only; layer files are never touched.
// ============================================================================

import { readFileSync, readdirSync } from 'node:fs';
import { dirname, join } from 'node:path';
import { fileURLToPath } from 'node:url';
import { PNG } from 'pngjs';

import { FetchLike } from '../src/api.js';
import { Raster } from '../src/composite.js';
import { Manifest } from '../src/types.js';
import { validateManifest } from '../src/validate.js';

export const FIXTURES = join(dirname(fileURLToPath(import.meta.url)), 'fixtures');

/** Load a bundle directory into an in-memory file map. */
export function loadBundleDir(dir: string): Map<string, Uint8Array> {
  const files = new Map<string, Uint8Array>();
  for (const name of readdirSync(dir)) {
    files.set(name, new Uint8Array(readFileSync(join(dir, name))));
  }
  return files;
}

export function decodePng(bytes: Uint8Array): Raster {
  const png = PNG.sync.read(Buffer.from(bytes));
  return {
    width: png.width,
    height: png.height,
    data: new Uint8ClampedArray(png.data),
  };
}

export function manifestOf(files: Map<string, Uint8Array>): Manifest {
  const raw = files.get('manifest.json');
  if (raw === undefined) throw new Error('no manifest.json in file map');
  return JSON.parse(new TextDecoder().decode(raw)) as Manifest;
}

/**
 * fetch-compatible handler over the file map.  Mirrors the engine
 * endpoints used by BundleApi; composite is not served here because the
 * tests composite locally.
 */
export function bundleServer(files: Map<string, Uint8Array>): FetchLike {
  return async (url: string, init?: RequestInit): Promise<Response> => {
    const path = url.replace(/^https?:\/\/[^/]+/, '');
    if (path === '/api/bundle/manifest' && (init?.method ?? 'GET') === 'GET') {
      const body = files.get('manifest.json');
      if (body === undefined) return new Response('not found', { status: 404 });
      return new Response(Buffer.from(body), { status: 200 });
    }
    if (path === '/api/bundle/manifest' && init?.method === 'PUT') {
      const manifest = JSON.parse(String(init.body)) as Manifest;
      const violations = validateManifest(manifest).concat(fileChecks(manifest, files));
      if (violations.length > 0) {
        return new Response(JSON.stringify({ detail: { violations } }), { status: 422 });
      }
      files.set(
        'manifest.json',
        new TextEncoder().encode(JSON.stringify(manifest, null, 2)),
      );
      return new Response(JSON.stringify({ ok: true }), { status: 200 });
    }
    const layerMatch = path.match(/^\/api\/bundle\/layers\/(.+)$/);
    if (layerMatch !== null) {
      const body = files.get(decodeURIComponent(layerMatch[1]));
      if (body === undefined) return new Response('not found', { status: 404 });
      return new Response(Buffer.from(body), { status: 200 });
    }
    return new Response('not found', { status: 404 });
  };
}

/** The server-only check the client cannot do: referenced files exist. */
function fileChecks(
  manifest: Manifest,
  files: Map<string, Uint8Array>,
): { code: string; detail: string }[] {
  const out: { code: string; detail: string }[] = [];
  for (const layer of manifest.layers ?? []) {
    if (layer.kind === 'text') continue;
    const names = layer.kind === 'object' ? [layer.file, layer.mask] : [layer.file];
    for (const name of names) {
      if (!name || !files.has(name)) {
        out.push({ code: 'missing_file', detail: String(name) });
      }
    }
  }
  return out;
}
