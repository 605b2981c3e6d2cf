/** Interaction tracking: one envelope per interaction, views fired once
 * per card, and an offline-tolerant queue that flushes exactly once
 * (server-side idempotency keys survive retried batches). */

import { ApiClient, Card, EventEnvelope, EventKind } from './api.js';

export type InteractionKind = 'view' | 'favorite' | 'detail' | 'modal';

const WIRE_EVENT: Record<InteractionKind, EventKind> = {
  view: 'view',
  favorite: 'favorite',
  detail: 'detail_page',
  modal: 'modal',
};

const defaultId = () =>
  globalThis.crypto?.randomUUID?.() ??
  `evt-${Date.now()}-${Math.random().toString(36).slice(2)}`;

export class InteractionTracker {
  private queue: EventEnvelope[] = [];
  private readonly viewedItems = new Set<string>();
  private flushing = false;

  constructor(
    private readonly api: ApiClient,
    readonly userId: string,
    private readonly now: () => number = () => Date.now() / 1000,
    private readonly newId: () => string = defaultId,
  ) {}

  get pending(): number {
    return this.queue.length;
  }

  get viewedCount(): number {
    return this.viewedItems.size;
  }

  /** First visibility of a card; later calls for the same card are no-ops. */
  view(card: Card): boolean {
    if (this.viewedItems.has(card.item_id)) return false;
    this.viewedItems.add(card.item_id);
    this.enqueue(card, 'view');
    return true;
  }

  /** Explicit interactions always enqueue; no client-side aggregation. */
  interact(card: Card, kind: Exclude<InteractionKind, 'view'>): void {
    this.enqueue(card, kind);
  }

  private enqueue(card: Card, kind: InteractionKind): void {
    this.queue.push({
      user_id: this.userId,
      item_id: card.item_id,
      event: WIRE_EVENT[kind],
      ts: this.now(),
      event_id: this.newId(),
    });
  }

  /** Push everything queued so far. On failure the batch stays queued for
   * the next call; event ids keep a retried batch exactly-once on the
   * server. Returns the number of envelopes delivered by this call. */
  async flush(): Promise<number> {
    if (this.flushing || this.queue.length === 0) return 0;
    this.flushing = true;
    const batch = this.queue.slice();
    try {
      await this.api.postEvents(batch);
      this.queue = this.queue.slice(batch.length);
      return batch.length;
    } catch {
      return 0; // offline: keep the queue intact
    } finally {
      this.flushing = false;
    }
  }
}
