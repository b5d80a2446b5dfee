// Archive view. Admins are barred from the raw archive by the server; the
// view renders that denial as an explicit access-denied state instead of
// treating it as a transport failure.

import type { ApiClient } from './api.js';
import { ApiError } from './api.js';
import type { ArchiveRecord, Role } from './types.js';

export interface ArchiveState {
  records: ArchiveRecord[];
  denied: boolean;
  deniedMessage: string | null;
  error: string | null;
}

export class ArchiveView {
  state: ArchiveState = { records: [], denied: false, deniedMessage: null, error: null };

  constructor(
    private readonly api: ApiClient,
    private readonly role: Role,
    private readonly onChange: (state: ArchiveState) => void = () => {},
  ) {}

  async refresh(): Promise<void> {
    try {
      const records = await this.api.readArchive({ self: this.role === 'employee' });
      this.state = { records, denied: false, deniedMessage: null, error: null };
    } catch (err) {
      if (err instanceof ApiError && err.isRoleError) {
        this.state = {
          records: [],
          denied: true,
          deniedMessage: err.message,
          error: null,
        };
      } else {
        this.state = {
          ...this.state,
          error: err instanceof Error ? err.message : String(err),
        };
      }
    }
    this.onChange(this.state);
  }
}
