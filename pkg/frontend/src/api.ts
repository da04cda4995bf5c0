// Thin typed client over fetch. The console owns no state of its own:
// every number it shows round-trips through these calls.

import type {
  BatchResponse,
  EscalationRecord,
  LabelsResponse,
  MetricsReport,
  PosteriorResult,
  ReviewRequest,
  ReviewResponse,
  SpreadRequest,
} from './types.js';

export type FetchLike = (input: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    detail: string,
  ) {
    super(detail);
  }
}

async function parse<T>(response: Response): Promise<T> {
  if (!response.ok) {
    let detail = response.statusText;
    try {
      const body = (await response.json()) as { detail?: string };
      if (body.detail) detail = body.detail;
    } catch {
      // body was not JSON; keep the status text
    }
    throw new ApiError(response.status, detail);
  }
  return (await response.json()) as T;
}

export class ApiClient {
  constructor(
    private readonly fetchFn: FetchLike = (input, init) => fetch(input, init),
    private readonly base = '',
  ) {}

  private get(path: string): Promise<Response> {
    return this.fetchFn(this.base + path);
  }

  private post(path: string, body: unknown): Promise<Response> {
    return this.fetchFn(this.base + path, {
      method: 'POST',
      headers: { 'Content-Type': 'application/json' },
      body: JSON.stringify(body),
    });
  }

  async pendingEscalations(): Promise<EscalationRecord[]> {
    const body = await parse<{ escalations: EscalationRecord[] }>(
      await this.get('/escalations?status=PENDING'),
    );
    return body.escalations;
  }

  async review(recordId: string, request: ReviewRequest): Promise<ReviewResponse> {
    return parse(await this.post(`/escalations/${recordId}/review`, request));
  }

  async hitlBatch(k: number): Promise<BatchResponse> {
    return parse(await this.get(`/hitl/batch?k=${k}`));
  }

  async submitLabels(
    labels: Array<{ text: string; label: string }>,
  ): Promise<LabelsResponse> {
    return parse(await this.post('/labels', { labels }));
  }

  async metrics(from: string, to: string): Promise<MetricsReport> {
    return parse(await this.get(`/metrics?from=${from}&to=${to}`));
  }

  async spreadEstimate(request: SpreadRequest): Promise<PosteriorResult> {
    return parse(await this.post('/spread/estimate', request));
  }
}
