/** DOM rendering for the card grid: color-hashed placeholder tiles in
 * server rank order, left to right, top to bottom. */

import { Card } from './api.js';
import { InteractionTracker } from './events.js';

/** Deterministic tile color: golden-angle hue spacing keeps neighboring
 * category ids visually distinct. */
export function categoryColor(category: number): string {
  const hue = (category * 137.508) % 360;
  return `hsl(${hue.toFixed(1)}, 65%, 60%)`;
}

export interface GridHandlers {
  tracker: InteractionTracker;
  onModal?: (card: Card) => void;
  showScores?: boolean;
}

export function cardElement(doc: Document, card: Card, handlers: GridHandlers): HTMLElement {
  const tile = doc.createElement('article');
  tile.className = 'card';
  tile.dataset.itemId = card.item_id;
  tile.dataset.category = String(card.category);
  tile.style.background = categoryColor(card.category);

  const rank = doc.createElement('span');
  rank.className = 'rank';
  rank.textContent = `#${card.rank}`;
  tile.appendChild(rank);

  const label = doc.createElement('span');
  label.className = 'category';
  label.textContent = `category ${card.category}`;
  tile.appendChild(label);

  if (handlers.showScores) {
    const badge = doc.createElement('span');
    badge.className = 'score';
    badge.textContent = card.score.toFixed(3);
    tile.appendChild(badge);
  }

  const favorite = doc.createElement('button');
  favorite.className = 'favorite';
  favorite.textContent = '♥';
  favorite.addEventListener('click', (ev) => {
    ev.stopPropagation();
    handlers.tracker.interact(card, 'favorite');
    favorite.classList.add('active');
  });
  tile.appendChild(favorite);

  const detail = doc.createElement('a');
  detail.className = 'detail';
  detail.textContent = 'details';
  detail.href = '#';
  detail.addEventListener('click', (ev) => {
    ev.preventDefault();
    ev.stopPropagation();
    handlers.tracker.interact(card, 'detail');
  });
  tile.appendChild(detail);

  tile.addEventListener('click', () => {
    handlers.tracker.interact(card, 'modal');
    handlers.onModal?.(card);
  });
  return tile;
}

export function appendCards(
  doc: Document,
  container: HTMLElement,
  cards: Card[],
  handlers: GridHandlers,
  observeView: (tile: HTMLElement, card: Card) => void,
): void {
  for (const card of cards) {
    const tile = cardElement(doc, card, handlers);
    container.appendChild(tile);
    observeView(tile, card);
  }
}
