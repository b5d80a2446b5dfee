// Live session board for admins, fed exclusively by GET /sessions
// responses. Rows are a projection of server data, never synthesized.

import type { ApiClient } from './api.js';
import { Poller, type PollerOptions } from './poll.js';
import type { SessionBoardEntry } from './types.js';

export interface BoardRow {
  employeeName: string;
  status: string;
  lastOutcome: string | null;
  missRun: number;
  lastCheckAt: number | null;
}

export function toRows(entries: SessionBoardEntry[]): BoardRow[] {
  return entries.map((e) => ({
    employeeName: e.employee_name,
    status: e.status,
    lastOutcome: e.last_outcome,
    missRun: e.miss_run,
    lastCheckAt: e.last_check_at,
  }));
}

export class SessionBoard {
  rows: BoardRow[] = [];
  error: string | null = null;
  readonly poller: Poller<SessionBoardEntry[]>;

  constructor(
    api: ApiClient,
    private readonly onChange: (rows: BoardRow[], error: string | null) => void = () => {},
    pollerOptions: PollerOptions = {},
  ) {
    this.poller = new Poller(
      () => api.listSessions(),
      (entries) => {
        this.rows = toRows(entries);
        this.error = null;
        this.onChange(this.rows, null);
      },
      (err) => {
        this.error = err instanceof Error ? err.message : String(err);
        this.onChange(this.rows, this.error);
      },
      { intervalMs: 5000, ...pollerOptions },
    );
  }

  start(): void {
    this.poller.start();
  }

  stop(): void {
    this.poller.stop();
  }
}
