/** Thin client over the layout service.
 *
 * At most one generation request is in flight: starting a new one cancels
 * the previous (the cancel policy from the UI spec).
 */

import type {
  CategoriesResponse,
  ConstraintGraphJson,
  GenerateResponse,
  LayoutJson,
  RecommendResponse,
} from "./types.js";

export class ServiceRequestError extends Error {
  constructor(
    message: string,
    readonly status: number,
    readonly field?: string,
  ) {
    super(message);
  }
}

async function parseError(response: Response): Promise<ServiceRequestError> {
  let field: string | undefined;
  let message = `service returned ${response.status}`;
  try {
    const body = (await response.json()) as { detail?: { field?: string; message?: string } };
    if (body.detail?.message) {
      message = body.detail.message;
      field = body.detail.field;
    }
  } catch {
    // keep the generic message
  }
  return new ServiceRequestError(message, response.status, field);
}

export interface GenerateOptions {
  samples: number;
  seed: number;
  fixedSizes?: Record<number, { w: number; h: number }>;
  refine?: boolean;
}

export class ApiClient {
  private inflight: AbortController | null = null;

  constructor(
    readonly baseUrl: string,
    private readonly fetchFn: typeof fetch = fetch,
  ) {}

  private async post<T>(path: string, body: unknown, signal?: AbortSignal): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify(body),
      signal,
    });
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as T;
  }

  async categories(): Promise<string[]> {
    const response = await this.fetchFn(`${this.baseUrl}/api/categories`);
    if (!response.ok) throw await parseError(response);
    return ((await response.json()) as CategoriesResponse).categories;
  }

  async health(): Promise<{ status: string; checkpoint: string }> {
    const response = await this.fetchFn(`${this.baseUrl}/api/health`);
    if (!response.ok) throw await parseError(response);
    return (await response.json()) as { status: string; checkpoint: string };
  }

  /** Cancels any generation already in flight. */
  async generate(
    constraints: ConstraintGraphJson,
    options: GenerateOptions,
  ): Promise<GenerateResponse> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    const fixed: Record<string, [number, number]> = {};
    for (const [key, value] of Object.entries(options.fixedSizes ?? {})) {
      fixed[key] = [value.w, value.h];
    }
    try {
      return await this.post<GenerateResponse>(
        "/api/generate",
        {
          constraints,
          samples: options.samples,
          seed: options.seed,
          fixed_sizes: fixed,
          refine: options.refine ?? true,
        },
        controller.signal,
      );
    } finally {
      if (this.inflight === controller) this.inflight = null;
    }
  }

  async recommend(
    layout: LayoutJson,
    targets: string[],
    seed: number,
  ): Promise<RecommendResponse> {
    return this.post<RecommendResponse>("/api/recommend", { layout, targets, seed });
  }
}
