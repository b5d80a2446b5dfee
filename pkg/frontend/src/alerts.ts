// Alert feed: polls GET /alerts, keeps one item per alert id, and tracks
// acknowledgements purely client-side (the server has no ack concept).

import type { ApiClient } from './api.js';
import { Poller, type PollerOptions } from './poll.js';
import type { Alert } from './types.js';

export interface AlertFeedItem {
  alert: Alert;
  acknowledged: boolean;
}

export class AlertFeed {
  items = new Map<string, AlertFeedItem>();
  error: string | null = null;
  readonly poller: Poller<Alert[]>;

  constructor(
    api: ApiClient,
    private readonly onChange: (items: AlertFeedItem[]) => void = () => {},
    pollerOptions: PollerOptions = {},
  ) {
    this.poller = new Poller(
      () => api.listAlerts(),
      (alerts) => {
        this.merge(alerts);
        this.error = null;
        this.onChange(this.list());
      },
      (err) => {
        this.error = err instanceof Error ? err.message : String(err);
        this.onChange(this.list());
      },
      { intervalMs: 5000, ...pollerOptions },
    );
  }

  private merge(alerts: Alert[]): void {
    for (const alert of alerts) {
      const existing = this.items.get(alert.alert_id);
      if (existing) {
        existing.alert = alert; // dedupe by id; ack state survives refreshes
      } else {
        this.items.set(alert.alert_id, { alert, acknowledged: false });
      }
    }
  }

  list(): AlertFeedItem[] {
    return [...this.items.values()].sort(
      (a, b) => b.alert.triggered_at - a.alert.triggered_at,
    );
  }

  unacknowledgedCount(): number {
    return this.list().filter((i) => !i.acknowledged).length;
  }

  acknowledge(alertId: string): void {
    const item = this.items.get(alertId);
    if (item) {
      item.acknowledged = true;
      this.onChange(this.list());
    }
  }

  start(): void {
    this.poller.start();
  }

  stop(): void {
    this.poller.stop();
  }
}
