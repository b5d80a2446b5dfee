// Roster view-model: employee CRUD bound to /employees. Holds no
// authoritative state; every mutation round-trips through the API and the
// visible list is whatever the last GET returned.

import type { ApiClient } from './api.js';
import { ApiError } from './api.js';
import type { Employee } from './types.js';

export interface RosterState {
  employees: Employee[];
  banner: string | null;
  /** token of the most recently created employee, shown exactly once */
  issuedToken: string | null;
}

export class RosterView {
  state: RosterState = { employees: [], banner: null, issuedToken: null };

  constructor(
    private readonly api: ApiClient,
    private readonly onChange: (state: RosterState) => void = () => {},
  ) {}

  private publish(): void {
    this.onChange(this.state);
  }

  private fail(err: unknown): void {
    this.state.banner =
      err instanceof ApiError && err.isRoleError
        ? `Not allowed: ${err.message}`
        : `Request failed: ${err instanceof Error ? err.message : String(err)}`;
    this.publish();
  }

  async refresh(): Promise<void> {
    try {
      this.state.employees = await this.api.listEmployees();
      this.state.banner = null;
    } catch (err) {
      this.fail(err);
      return;
    }
    this.publish();
  }

  async create(input: {
    employee_id: string;
    name: string;
    contact: string;
    images: string[];
  }): Promise<void> {
    try {
      const created = await this.api.createEmployee(input);
      this.state.issuedToken = created.token;
    } catch (err) {
      this.fail(err);
      return;
    }
    await this.refresh();
  }

  async update(id: string, patch: { name?: string; contact?: string; active?: boolean }): Promise<void> {
    try {
      await this.api.updateEmployee(id, patch);
    } catch (err) {
      this.fail(err);
      return;
    }
    await this.refresh();
  }

  async remove(id: string): Promise<void> {
    try {
      await this.api.deleteEmployee(id);
    } catch (err) {
      this.fail(err);
      return;
    }
    await this.refresh();
  }
}
