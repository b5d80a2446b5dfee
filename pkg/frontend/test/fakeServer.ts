// In-memory double of the attendance service REST contract: same routes,
// role rules, status codes, and {code, message} error bodies as the real
// backend. Frame outcomes are decided by an injectable classifier so
// tests can script misses without shipping real images.

import type { Alert, ArchiveRecord, Employee, SessionBoardEntry } from '../src/types.js';

interface TokenRow {
  principal_id: string;
  role: 'admin' | 'employee' | 'auditor';
}

interface SessionRow {
  session_id: string;
  employee_id: string;
  started_at: number;
  ended_at: number | null;
  status: 'active' | 'ended' | 'ended_by_admin';
  miss_run: number;
  checks_done: number;
  check_times: number[];
}

export type FrameClassifier = (employeeId: string, body: string) => boolean; // true = present

export class FakeServer {
  tokens = new Map<string, TokenRow>([
    ['admin-token', { principal_id: 'admin', role: 'admin' }],
    ['auditor-token', { principal_id: 'auditor', role: 'auditor' }],
  ]);
  employees = new Map<string, Employee>();
  sessions = new Map<string, SessionRow>();
  alerts: Alert[] = [];
  archive: ArchiveRecord[] = [];
  nMiss = 3;
  now = 1_000_000;
  requestLog: { method: string; path: string; token: string | null }[] = [];
  classify: FrameClassifier = () => true;

  private idCounter = 0;

  private uid(prefix: string): string {
    this.idCounter += 1;
    return `${prefix}-${this.idCounter}`;
  }

  /** fetch-compatible entry point */
  fetch = async (url: string, init: RequestInit = {}): Promise<Response> => {
    const method = (init.method ?? 'GET').toUpperCase();
    const parsed = new URL(url, 'http://fake');
    const path = parsed.pathname;
    const headers = new Headers(init.headers);
    const auth = headers.get('authorization');
    const token = auth?.startsWith('Bearer ') ? auth.slice(7) : null;
    this.requestLog.push({ method, path, token });

    if (path === '/healthz') return json(200, { status: 'ok' });
    if (!token) return error(401, 'unauthorized', 'missing bearer token');
    const who = this.tokens.get(token);
    if (!who) return error(403, 'forbidden', 'unknown token');

    const body = typeof init.body === 'string' ? init.body : await blobText(init.body);

    if (path === '/whoami') return json(200, who);

    if (path === '/employees' && method === 'POST') {
      if (who.role !== 'admin') return error(403, 'permission_denied', 'admin only');
      const input = JSON.parse(body || '{}');
      if (!input.images?.length) {
        return error(400, 'enrollment_failed', 'at least one enrollment image is required');
      }
      if (!/^[^@\s]+@[^@\s]+\.[^@\s]+$/.test(input.contact ?? '')) {
        return error(400, 'validation_error', 'invalid email');
      }
      if (this.employees.has(input.employee_id)) {
        return error(409, 'already_exists', 'duplicate id');
      }
      const employee: Employee = {
        employee_id: input.employee_id,
        name: input.name,
        contact: input.contact,
        role: 'employee',
        active: true,
        enrollment_image_refs: input.images.map(() => this.uid('img')),
      };
      this.employees.set(employee.employee_id, employee);
      const empToken = this.uid('tok');
      this.tokens.set(empToken, { principal_id: employee.employee_id, role: 'employee' });
      return json(201, { employee, token: empToken });
    }

    if (path === '/employees' && method === 'GET') {
      if (who.role !== 'admin') return error(403, 'permission_denied', 'admin only');
      const list = [...this.employees.values()].sort((a, b) =>
        a.employee_id.localeCompare(b.employee_id),
      );
      return json(200, list);
    }

    const employeeMatch = path.match(/^\/employees\/([^/]+)$/);
    if (employeeMatch) {
      if (who.role !== 'admin') return error(403, 'permission_denied', 'admin only');
      const id = decodeURIComponent(employeeMatch[1]!);
      const employee = this.employees.get(id);
      if (!employee) return error(404, 'not_found', `employee ${id} does not exist`);
      if (method === 'PUT') {
        const patch = JSON.parse(body || '{}');
        if (patch.contact && !/^[^@\s]+@[^@\s]+\.[^@\s]+$/.test(patch.contact)) {
          return error(400, 'validation_error', 'invalid email');
        }
        Object.assign(employee, {
          name: patch.name ?? employee.name,
          contact: patch.contact ?? employee.contact,
          active: patch.active ?? employee.active,
        });
        return json(200, { employee });
      }
      if (method === 'DELETE') {
        this.employees.delete(id);
        for (const session of this.sessions.values()) {
          if (session.employee_id === id && session.status === 'active') {
            session.status = 'ended_by_admin';
            session.ended_at = this.now;
          }
        }
        return json(200, { status: 'deleted', employee_id: id });
      }
    }

    if (path === '/sessions' && method === 'POST') {
      if (who.role !== 'employee') return error(403, 'permission_denied', 'employee only');
      for (const session of this.sessions.values()) {
        if (session.employee_id === who.principal_id && session.status === 'active') {
          return error(409, 'session_exists', 'active session already exists');
        }
      }
      const input = JSON.parse(body || '{}');
      const duration = input.planned_duration_s ?? 8 * 3600;
      const segments = 4;
      const times = Array.from(
        { length: segments },
        (_, i) => this.now + ((i + 0.5) * duration) / segments,
      );
      const session: SessionRow = {
        session_id: this.uid('sess'),
        employee_id: who.principal_id,
        started_at: this.now,
        ended_at: null,
        status: 'active',
        miss_run: 0,
        checks_done: 0,
        check_times: times,
      };
      this.sessions.set(session.session_id, session);
      return json(201, {
        session: publicSession(session),
        schedule: {
          session_id: session.session_id,
          check_times: times,
          segment_count: segments,
          rng_seed: 0,
        },
      });
    }

    if (path === '/sessions' && method === 'GET') {
      if (who.role !== 'admin') return error(403, 'permission_denied', 'admin only');
      const board: SessionBoardEntry[] = [...this.sessions.values()].map((s) => {
        const last = this.archive.filter((r) => r.session_id === s.session_id).at(-1);
        return {
          ...publicSession(s),
          employee_name: this.employees.get(s.employee_id)?.name ?? s.employee_id,
          last_outcome: last?.outcome ?? null,
          last_check_at: last?.at ?? null,
        };
      });
      return json(200, board);
    }

    const frameMatch = path.match(/^\/sessions\/([^/]+)\/frames$/);
    if (frameMatch && method === 'POST') {
      const session = this.sessions.get(decodeURIComponent(frameMatch[1]!));
      if (!session) return error(404, 'not_found', 'unknown session');
      if (who.role !== 'employee' || who.principal_id !== session.employee_id) {
        return error(403, 'permission_denied', 'token does not own this session');
      }
      if (session.status !== 'active') {
        return error(409, 'session_not_active', 'session has ended');
      }
      const present = this.classify(session.employee_id, body ?? '');
      session.checks_done += 1;
      let alertId: string | null = null;
      if (present) {
        session.miss_run = 0;
      } else {
        session.miss_run += 1;
        if (session.miss_run === this.nMiss) {
          alertId = this.uid('alert');
          this.alerts.push({
            alert_id: alertId,
            session_id: session.session_id,
            employee_id: session.employee_id,
            triggered_at: this.now,
            miss_run_length: session.miss_run,
            recipients: ['admin', 'employee'],
          });
        }
      }
      const employee = this.employees.get(session.employee_id);
      const outcome = present ? 'present' : 'unknown_face';
      this.archive.push({
        seq: this.archive.length + 1,
        session_id: session.session_id,
        at: this.now,
        outcome,
        best_distance: present ? 0.01 : 1.9,
        frame_ref: present ? null : this.uid('frame'),
        employee_id: session.employee_id,
        employee_name: employee?.name ?? session.employee_id,
        employee_contact: employee?.contact ?? '',
      });
      this.now += 1;
      return json(200, {
        session_id: session.session_id,
        outcome,
        decision: present ? session.employee_id : 'UNKNOWN',
        best_distance: present ? 0.01 : 1.9,
        miss_run: session.miss_run,
        checks_done: session.checks_done,
        archive_seq: this.archive.length,
        alert_id: alertId,
        faces: [],
      });
    }

    const endMatch = path.match(/^\/sessions\/([^/]+)\/end$/);
    if (endMatch && method === 'POST') {
      const session = this.sessions.get(decodeURIComponent(endMatch[1]!));
      if (!session) return error(404, 'not_found', 'unknown session');
      if (who.role !== 'employee' || who.principal_id !== session.employee_id) {
        return error(403, 'permission_denied', 'token does not own this session');
      }
      if (session.status !== 'active') {
        return error(409, 'session_not_active', 'already ended');
      }
      session.status = 'ended';
      session.ended_at = this.now;
      return json(200, { session: publicSession(session) });
    }

    const sessionMatch = path.match(/^\/sessions\/([^/]+)$/);
    if (sessionMatch && method === 'GET') {
      const session = this.sessions.get(decodeURIComponent(sessionMatch[1]!));
      if (!session) return error(404, 'not_found', 'unknown session');
      const owner = who.role === 'employee' && who.principal_id === session.employee_id;
      if (who.role !== 'admin' && !owner) {
        return error(403, 'permission_denied', 'not your session');
      }
      return json(200, {
        session: publicSession(session),
        schedule: {
          session_id: session.session_id,
          check_times: session.check_times,
          segment_count: session.check_times.length,
          rng_seed: 0,
        },
      });
    }

    if (path === '/alerts' && method === 'GET') {
      if (who.role === 'admin') return json(200, this.alerts);
      if (who.role === 'employee') {
        return json(200, this.alerts.filter((a) => a.employee_id === who.principal_id));
      }
      return error(403, 'permission_denied', 'auditors have no alert feed');
    }

    if (path === '/archive' && method === 'GET') {
      if (who.role === 'admin') {
        return error(403, 'permission_denied', 'admins may not read the presence archive');
      }
      if (who.role === 'employee') {
        if (parsed.searchParams.get('self') !== '1') {
          return error(403, 'permission_denied', 'employees must query with ?self=1');
        }
        return json(200, this.archive.filter((r) => r.employee_id === who.principal_id));
      }
      return json(200, this.archive);
    }

    return error(404, 'not_found', `no route for ${method} ${path}`);
  };
}

function publicSession(s: SessionRow) {
  return {
    session_id: s.session_id,
    employee_id: s.employee_id,
    started_at: s.started_at,
    ended_at: s.ended_at,
    status: s.status,
    miss_run: s.miss_run,
    checks_done: s.checks_done,
  };
}

function json(status: number, body: unknown): Response {
  return new Response(JSON.stringify(body), {
    status,
    headers: { 'Content-Type': 'application/json' },
  });
}

function error(status: number, code: string, message: string): Response {
  return json(status, { code, message });
}

async function blobText(body: BodyInit | null | undefined): Promise<string> {
  if (!body) return '';
  if (typeof body === 'string') return body;
  if (body instanceof Blob) return body.text();
  return String(body);
}
