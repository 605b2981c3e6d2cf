/** Infinite-scroll page source: one in-flight fetch, duplicate-guarded
 * appends, retry with backoff, and a banner flag for persistent failure. */

import { ApiClient, Card } from './api.js';

export interface StreamOptions {
  size?: number;
  retries?: number;
  backoffMs?: number;
  sleep?: (ms: number) => Promise<void>;
}

const defaultSleep = (ms: number) => new Promise<void>((r) => setTimeout(r, ms));

export class StreamSession {
  readonly cards: Card[] = [];
  bannerVisible = false;

  private readonly seen = new Set<string>();
  private nextPage = 0;
  private inFlight: Promise<Card[]> | null = null;
  private readonly size?: number;
  private readonly retries: number;
  private readonly backoffMs: number;
  private readonly sleep: (ms: number) => Promise<void>;

  constructor(
    private readonly api: ApiClient,
    readonly userId: string,
    options: StreamOptions = {},
  ) {
    this.size = options.size;
    this.retries = options.retries ?? 3;
    this.backoffMs = options.backoffMs ?? 500;
    this.sleep = options.sleep ?? defaultSleep;
  }

  get pagesFetched(): number {
    return this.nextPage;
  }

  /** Fetch the next page and append its unseen cards. Concurrent calls
   * share the same in-flight request. */
  fetchNextPage(): Promise<Card[]> {
    if (!this.inFlight) {
      this.inFlight = this.fetchWithRetry().finally(() => {
        this.inFlight = null;
      });
    }
    return this.inFlight;
  }

  private async fetchWithRetry(): Promise<Card[]> {
    let lastError: unknown;
    for (let attempt = 0; attempt <= this.retries; attempt += 1) {
      if (attempt > 0) {
        await this.sleep(this.backoffMs * 2 ** (attempt - 1));
      }
      try {
        const page = await this.api.streamPage(this.userId, this.nextPage, this.size);
        this.nextPage += 1;
        this.bannerVisible = false;
        const fresh = page.items.filter((card) => !this.seen.has(card.item_id));
        for (const card of fresh) {
          this.seen.add(card.item_id);
          this.cards.push(card);
        }
        return fresh;
      } catch (error) {
        lastError = error;
      }
    }
    this.bannerVisible = true;
    throw lastError;
  }
}
