/** Typed client for the ranking service HTTP API. */

export interface Card {
  item_id: string;
  category: number;
  score: number;
  rank: number;
}

export interface StreamPage {
  user_id: string;
  page: number;
  size: number;
  model_generation: number;
  weights_generation: number;
  items: Card[];
}

export type EventKind = 'view' | 'favorite' | 'detail_page' | 'modal';

export interface EventEnvelope {
  user_id: string;
  item_id: string;
  event: EventKind;
  ts?: number;
  event_id?: string;
}

export interface IngestAck {
  accepted: number;
  deduplicated: number;
  unknown_items: number;
}

export interface UserWeights {
  user_id: string;
  clicks: number;
  personalized: boolean;
  weights: number[];
}

export interface WeightsView {
  generation: number;
  d: number;
  global: number[];
  user?: UserWeights;
}

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message);
  }
}

export class ApiClient {
  private readonly fetchFn: FetchLike;

  constructor(readonly baseUrl: string = '', fetchFn?: FetchLike) {
    // bind so a bare global fetch keeps its expected receiver
    this.fetchFn = fetchFn ?? ((url, init) => fetch(url, init));
  }

  private async request<T>(path: string, init?: RequestInit): Promise<T> {
    const response = await this.fetchFn(`${this.baseUrl}${path}`, init);
    if (!response.ok) {
      throw new ApiError(response.status, `${path} -> HTTP ${response.status}`);
    }
    return (await response.json()) as T;
  }

  streamPage(userId: string, page: number, size?: number): Promise<StreamPage> {
    const params = new URLSearchParams({ user_id: userId, page: String(page) });
    if (size !== undefined) params.set('size', String(size));
    return this.request<StreamPage>(`/v1/stream?${params}`);
  }

  postEvents(events: EventEnvelope[]): Promise<IngestAck> {
    return this.request<IngestAck>('/v1/events', {
      method: 'POST',
      headers: { 'content-type': 'application/json' },
      body: JSON.stringify(events),
    });
  }

  weights(userId: string): Promise<WeightsView> {
    const params = new URLSearchParams({ user_id: userId });
    return this.request<WeightsView>(`/v1/admin/weights?${params}`);
  }

  refresh(): Promise<{ model_generation: number }> {
    return this.request('/v1/admin/refresh', { method: 'POST' });
  }

  health(): Promise<{ ready: boolean }> {
    return this.request('/v1/health');
  }
}
