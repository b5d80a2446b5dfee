// Payload shapes of the attendance service REST API.

export type Role = 'admin' | 'employee' | 'auditor';

export interface Employee {
  employee_id: string;
  name: string;
  contact: string;
  role: 'admin' | 'employee';
  active: boolean;
  enrollment_image_refs: string[];
}

export interface EmployeeCreated {
  employee: Employee;
  token: string;
}

export interface Session {
  session_id: string;
  employee_id: string;
  started_at: number;
  ended_at: number | null;
  status: 'active' | 'ended' | 'ended_by_admin';
  miss_run: number;
  checks_done: number;
}

export interface SessionBoardEntry extends Session {
  employee_name: string;
  last_outcome: string | null;
  last_check_at: number | null;
}

export interface Schedule {
  session_id: string;
  check_times: number[];
  segment_count: number;
  rng_seed: number;
}

export interface SessionStarted {
  session: Session;
  schedule: Schedule;
}

export interface FrameResult {
  session_id: string;
  outcome: 'present' | 'no_face' | 'unknown_face' | 'wrong_person';
  decision: string | null;
  best_distance: number | null;
  miss_run: number;
  checks_done: number;
  archive_seq: number;
  alert_id: string | null;
  faces: unknown[];
}

export interface Alert {
  alert_id: string;
  session_id: string;
  employee_id: string;
  triggered_at: number;
  miss_run_length: number;
  recipients: string[];
}

export interface ArchiveRecord {
  seq: number;
  session_id: string;
  at: number;
  outcome: string;
  best_distance: number | null;
  frame_ref: string | null;
  employee_id: string;
  employee_name: string;
  employee_contact: string;
}

export interface ApiErrorBody {
  code: string;
  message: string;
}
