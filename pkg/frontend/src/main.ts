/** Browser wiring: infinite scroll via an IntersectionObserver sentinel,
 * per-card first-visibility view events, periodic queue flush and panel
 * polling. All state lives in the logic modules; this file only binds
 * them to the DOM. */

import { ApiClient, Card } from './api.js';
import { InteractionTracker } from './events.js';
import { appendCards } from './grid.js';
import { WeightsPanel } from './panel.js';
import { StreamSession } from './stream.js';

const params = new URLSearchParams(window.location.search);
const userId = params.get('user') ?? `guest-${Math.random().toString(36).slice(2, 8)}`;
const debug = params.get('debug') !== '0';

const api = new ApiClient(params.get('api') ?? '');
const session = new StreamSession(api, userId, { size: 60 });
const tracker = new InteractionTracker(api, userId);
const panel = new WeightsPanel(api, userId);

const grid = document.getElementById('grid') as HTMLElement;
const sentinel = document.getElementById('sentinel') as HTMLElement;
const banner = document.getElementById('banner') as HTMLElement;
const panelEl = document.getElementById('panel') as HTMLElement;
const modal = document.getElementById('modal') as HTMLElement;

const viewObserver = new IntersectionObserver((entries) => {
  for (const entry of entries) {
    if (!entry.isIntersecting) continue;
    const tile = entry.target as HTMLElement;
    const card = tileCards.get(tile);
    if (card && tracker.view(card)) viewObserver.unobserve(tile);
  }
}, { threshold: 0.5 });

const tileCards = new WeakMap<HTMLElement, Card>();

function openModal(card: Card) {
  modal.textContent = `item ${card.item_id} (category ${card.category})`;
  modal.classList.add('open');
  setTimeout(() => modal.classList.remove('open'), 1500);
}

async function loadMore() {
  try {
    const fresh = await session.fetchNextPage();
    banner.classList.toggle('visible', false);
    appendCards(document, grid, fresh, { tracker, onModal: openModal, showScores: debug },
      (tile, card) => {
        tileCards.set(tile, card);
        viewObserver.observe(tile);
      });
  } catch {
    banner.classList.toggle('visible', session.bannerVisible);
  }
}

new IntersectionObserver((entries) => {
  if (entries.some((entry) => entry.isIntersecting)) void loadMore();
}, { rootMargin: '400px' }).observe(sentinel);

function renderPanel() {
  const { active, clicks, bars } = panel.state;
  panelEl.classList.toggle('active', active);
  const headline = active
    ? `personalized after ${clicks} clicks`
    : `global weights (${clicks}/10 clicks)`;
  panelEl.innerHTML = `<h2>${headline}</h2>`;
  for (const bar of bars) {
    const row = document.createElement('div');
    row.className = 'bar-row';
    row.innerHTML =
      `<span class="bar-label">c${bar.category}</span>` +
      `<span class="bar" style="width:${bar.percent.toFixed(1)}%"></span>` +
      `<span class="bar-value">${bar.percent.toFixed(1)}%</span>`;
    panelEl.appendChild(row);
  }
}

setInterval(() => void tracker.flush(), 2000);
window.addEventListener('online', () => void tracker.flush());
document.addEventListener('visibilitychange', () => {
  if (document.visibilityState === 'hidden') void tracker.flush();
});
if (debug) {
  setInterval(() => {
    void panel.poll().then(renderPanel).catch(() => undefined);
  }, 3000);
}

void loadMore();
