import { describe, expect, it } from 'vitest';

import { ApiClient } from '../src/api.js';
import { ArchiveView } from '../src/archive.js';
import { FakeServer } from './fakeServer.js';

async function seedHistory(server: FakeServer) {
  const admin = new ApiClient('admin-token', server.fetch);
  const created = await admin.createEmployee({
    employee_id: 'emp-1',
    name: 'Ada',
    contact: 'ada@example.com',
    images: ['aW1n'],
  });
  const employee = new ApiClient(created.token, server.fetch);
  const { session } = await employee.startSession(3600);
  await employee.submitFrame(session.session_id, new Blob(['frame']));
  return created.token;
}

describe('archive view', () => {
  it('renders the access-denied state for admins', async () => {
    const server = new FakeServer();
    await seedHistory(server);
    const view = new ArchiveView(new ApiClient('admin-token', server.fetch), 'admin');
    await view.refresh();
    expect(view.state.denied).toBe(true);
    expect(view.state.deniedMessage).toMatch(/admins may not read/i);
    expect(view.state.records).toEqual([]);
    expect(view.state.error).toBeNull(); // denial is a state, not a failure
  });

  it('auditors read the full archive', async () => {
    const server = new FakeServer();
    await seedHistory(server);
    const view = new ArchiveView(new ApiClient('auditor-token', server.fetch), 'auditor');
    await view.refresh();
    expect(view.state.denied).toBe(false);
    expect(view.state.records).toHaveLength(1);
    expect(view.state.records[0]?.employee_id).toBe('emp-1');
  });

  it('employees read their own history via ?self=1', async () => {
    const server = new FakeServer();
    const token = await seedHistory(server);
    const view = new ArchiveView(new ApiClient(token, server.fetch), 'employee');
    await view.refresh();
    expect(view.state.denied).toBe(false);
    expect(view.state.records.map((r) => r.employee_id)).toEqual(['emp-1']);
    const selfCalls = server.requestLog.filter((r) => r.path === '/archive');
    expect(selfCalls.length).toBeGreaterThan(0);
  });
});
