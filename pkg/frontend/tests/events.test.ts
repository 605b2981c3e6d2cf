import { describe, expect, it } from 'vitest';

import { ApiClient, Card, EventEnvelope, FetchLike } from '../src/api.js';
import { InteractionTracker } from '../src/events.js';

const card = (id: string): Card => ({ item_id: id, category: 1, score: 0.4, rank: 1 });

function collectingFetch(received: EventEnvelope[][], failFirst = 0): FetchLike {
  let calls = 0;
  return async (_url, init) => {
    calls += 1;
    if (calls <= failFirst) throw new TypeError('network down');
    received.push(JSON.parse(String(init?.body)) as EventEnvelope[]);
    return new Response(JSON.stringify({ accepted: 1, deduplicated: 0, unknown_items: 0 }), {
      status: 200, headers: { 'content-type': 'application/json' },
    });
  };
}

describe('InteractionTracker', () => {
  it('maps each interaction to exactly one envelope', async () => {
    const received: EventEnvelope[][] = [];
    const tracker = new InteractionTracker(
      new ApiClient('', collectingFetch(received)), 'u',
    );
    tracker.view(card('a'));
    tracker.interact(card('a'), 'favorite');
    tracker.interact(card('a'), 'detail');
    tracker.interact(card('a'), 'modal');
    await tracker.flush();
    const events = received[0].map((e) => e.event);
    expect(events).toEqual(['view', 'favorite', 'detail_page', 'modal']);
  });

  it('fires the view exactly once per card', async () => {
    const received: EventEnvelope[][] = [];
    const tracker = new InteractionTracker(
      new ApiClient('', collectingFetch(received)), 'u',
    );
    expect(tracker.view(card('a'))).toBe(true);
    expect(tracker.view(card('a'))).toBe(false);
    expect(tracker.view(card('b'))).toBe(true);
    await tracker.flush();
    expect(received[0].filter((e) => e.event === 'view')).toHaveLength(2);
  });

  it('keeps the queue when offline and flushes once on reconnect', async () => {
    const received: EventEnvelope[][] = [];
    const tracker = new InteractionTracker(
      new ApiClient('', collectingFetch(received, 2)), 'u',
    );
    tracker.view(card('a'));
    tracker.interact(card('a'), 'favorite');

    expect(await tracker.flush()).toBe(0); // network down
    expect(await tracker.flush()).toBe(0); // still down
    expect(tracker.pending).toBe(2);

    expect(await tracker.flush()).toBe(2); // reconnect
    expect(tracker.pending).toBe(0);
    expect(received).toHaveLength(1);

    // the retried batch carries stable ids so the server can deduplicate
    const ids = received[0].map((e) => e.event_id);
    expect(new Set(ids).size).toBe(2);
    expect(await tracker.flush()).toBe(0); // nothing left
  });

  it('events queued during a failed flush are not lost', async () => {
    const received: EventEnvelope[][] = [];
    const tracker = new InteractionTracker(
      new ApiClient('', collectingFetch(received, 1)), 'u',
    );
    tracker.view(card('a'));
    await tracker.flush(); // fails
    tracker.interact(card('a'), 'favorite');
    await tracker.flush();
    expect(received[0].map((e) => e.event)).toEqual(['view', 'favorite']);
  });
});
