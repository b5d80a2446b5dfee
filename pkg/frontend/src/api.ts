// Typed client for the attendance service. All dashboard traffic goes
// through this module; the UI never hits fetch directly, which keeps the
// contract tests honest (they swap in a fake fetch).

import type {
  Alert,
  ApiErrorBody,
  ArchiveRecord,
  Employee,
  EmployeeCreated,
  FrameResult,
  SessionBoardEntry,
  SessionStarted,
  Session,
  Schedule,
} from './types.js';

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export class ApiError extends Error {
  constructor(
    readonly status: number,
    readonly code: string,
    message: string,
  ) {
    super(message);
    this.name = 'ApiError';
  }

  get isRoleError(): boolean {
    return this.status === 403;
  }
}

async function parseError(resp: Response): Promise<ApiError> {
  let body: ApiErrorBody = { code: 'error', message: resp.statusText };
  try {
    body = (await resp.json()) as ApiErrorBody;
  } catch {
    // non-JSON error body; keep the status text
  }
  return new ApiError(resp.status, body.code, body.message);
}

export class ApiClient {
  constructor(
    private readonly token: string,
    private readonly fetchImpl: FetchLike = (url, init) => globalThis.fetch(url, init),
    private readonly base = '',
  ) {}

  private headers(contentType?: string): Record<string, string> {
    const h: Record<string, string> = { Authorization: `Bearer ${this.token}` };
    if (contentType) h['Content-Type'] = contentType;
    return h;
  }

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const init: RequestInit = { method, headers: this.headers(body ? 'application/json' : undefined) };
    if (body !== undefined) init.body = JSON.stringify(body);
    const resp = await this.fetchImpl(this.base + path, init);
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as T;
  }

  health(): Promise<{ status: string }> {
    return this.request('GET', '/healthz');
  }

  listEmployees(): Promise<Employee[]> {
    return this.request('GET', '/employees');
  }

  createEmployee(input: {
    employee_id: string;
    name: string;
    contact: string;
    role?: string;
    images: string[]; // base64 JPEG/PNG
  }): Promise<EmployeeCreated> {
    return this.request('POST', '/employees', input);
  }

  updateEmployee(
    id: string,
    patch: { name?: string; contact?: string; active?: boolean; images?: string[] },
  ): Promise<{ employee: Employee }> {
    return this.request('PUT', `/employees/${encodeURIComponent(id)}`, patch);
  }

  deleteEmployee(id: string): Promise<{ status: string }> {
    return this.request('DELETE', `/employees/${encodeURIComponent(id)}`);
  }

  startSession(plannedDurationS = 8 * 3600): Promise<SessionStarted> {
    return this.request('POST', '/sessions', { planned_duration_s: plannedDurationS });
  }

  listSessions(): Promise<SessionBoardEntry[]> {
    return this.request('GET', '/sessions');
  }

  getSession(id: string): Promise<{ session: Session; schedule: Schedule }> {
    return this.request('GET', `/sessions/${encodeURIComponent(id)}`);
  }

  endSession(id: string): Promise<{ session: Session }> {
    return this.request('POST', `/sessions/${encodeURIComponent(id)}/end`);
  }

  async submitFrame(sessionId: string, image: Blob): Promise<FrameResult> {
    const resp = await this.fetchImpl(
      `${this.base}/sessions/${encodeURIComponent(sessionId)}/frames`,
      { method: 'POST', headers: this.headers('image/png'), body: image },
    );
    if (!resp.ok) throw await parseError(resp);
    return (await resp.json()) as FrameResult;
  }

  listAlerts(): Promise<Alert[]> {
    return this.request('GET', '/alerts');
  }

  readArchive(opts: { self?: boolean } = {}): Promise<ArchiveRecord[]> {
    const query = opts.self ? '?self=1' : '';
    return this.request('GET', `/archive${query}`);
  }
}
