// Thin client over the generation service. All layout changes in the studio
// originate from these responses; nothing is computed client-side.

import type {
  CatalogResponse,
  GenerateRequest,
  GenerationResponse,
  HealthResponse,
  RegenerateRequest,
} from './types.js';

export class ServiceError extends Error {
  constructor(
    message: string,
    public readonly status: number,
    public readonly fields: { field: string; message: string }[] = [],
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  const res = await fetch(base + path, init);
  const body = await res.json();
  if (!res.ok) {
    const fields = Array.isArray(body?.errors) ? body.errors : [];
    const detail = fields.map((f: { field: string; message: string }) => `${f.field}: ${f.message}`).join('; ');
    throw new ServiceError(detail || `HTTP ${res.status}`, res.status, fields);
  }
  return body as T;
}

export class StudioApi {
  constructor(private readonly base: string = '') {}

  health(): Promise<HealthResponse> {
    return request(this.base, '/health');
  }

  catalog(): Promise<CatalogResponse> {
    return request(this.base, '/catalog');
  }

  generate(req: GenerateRequest): Promise<GenerationResponse> {
    return request(this.base, '/generate', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(req),
    });
  }

  regenerate(req: RegenerateRequest): Promise<GenerationResponse> {
    return request(this.base, '/regenerate', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(req),
    });
  }
}
