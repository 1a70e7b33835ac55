// ============================================================================
// Bundle API client
// The only network surface the editor touches.  fetch is injectable so
// tests can run against an in-memory server.
// ============================================================================

import { Manifest } from './types.js';
import { Violation } from './validate.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    public status: number,
    message: string,
    public violations: Violation[] = [],
  ) {
    super(message);
    this.name = 'ApiError';
  }
}

export class BundleApi {
  constructor(
    private baseUrl = '',
    private fetchImpl: FetchLike = (...args) => fetch(...args),
  ) {}

  async getManifest(): Promise<Manifest> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/bundle/manifest`);
    if (!resp.ok) {
      throw new ApiError(resp.status, `manifest fetch failed (${resp.status})`);
    }
    return (await resp.json()) as Manifest;
  }

  layerUrl(name: string): string {
    return `${this.baseUrl}/api/bundle/layers/${encodeURIComponent(name)}`;
  }

  async getLayerBytes(name: string): Promise<Uint8Array> {
    const resp = await this.fetchImpl(this.layerUrl(name));
    if (!resp.ok) {
      throw new ApiError(resp.status, `layer ${name} fetch failed (${resp.status})`);
    }
    return new Uint8Array(await resp.arrayBuffer());
  }

  async putManifest(manifest: Manifest): Promise<void> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/bundle/manifest`, {
      method: 'PUT',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(manifest),
    });
    if (resp.status === 422) {
      const body = (await resp.json()) as { detail?: { violations?: Violation[] } };
      throw new ApiError(422, 'manifest rejected', body.detail?.violations ?? []);
    }
    if (!resp.ok) {
      throw new ApiError(resp.status, `manifest save failed (${resp.status})`);
    }
  }

  async getComposite(): Promise<Uint8Array> {
    const resp = await this.fetchImpl(`${this.baseUrl}/api/bundle/composite`, {
      method: 'POST',
    });
    if (!resp.ok) {
      throw new ApiError(resp.status, `composite failed (${resp.status})`);
    }
    return new Uint8Array(await resp.arrayBuffer());
  }
}
