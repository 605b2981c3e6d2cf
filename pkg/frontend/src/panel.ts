/** Debug panel state: the user's live category-weight distribution.
 * Inactive (falls back to the global bars) until the click threshold
 * flips personalization on server-side. */

import { ApiClient } from './api.js';

export interface WeightBar {
  category: number;
  percent: number;
}

export interface PanelState {
  active: boolean;
  clicks: number;
  bars: WeightBar[];
}

export function toBars(weights: number[]): WeightBar[] {
  const total = weights.reduce((acc, w) => acc + w, 0);
  if (total <= 0) return weights.map((_, category) => ({ category, percent: 0 }));
  return weights.map((w, category) => ({ category, percent: (100 * w) / total }));
}

export class WeightsPanel {
  state: PanelState = { active: false, clicks: 0, bars: [] };

  constructor(private readonly api: ApiClient, readonly userId: string) {}

  async poll(): Promise<PanelState> {
    const view = await this.api.weights(this.userId);
    const user = view.user;
    this.state = {
      active: user?.personalized ?? false,
      clicks: user?.clicks ?? 0,
      bars: toBars(user?.weights ?? view.global),
    };
    return this.state;
  }
}
