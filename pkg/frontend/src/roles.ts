// Client-side role gating. Mirrors the server's authorization rules so the
// UI never issues a request the backend would reject with 403; the
// contract tests assert the two stay in sync.

import type { Role } from './types.js';

export type Capability =
  | 'roster.read'
  | 'roster.write'
  | 'board.read'
  | 'alerts.read'
  | 'archive.read.all'
  | 'archive.read.self'
  | 'session.own';

const GRANTS: Record<Role, ReadonlySet<Capability>> = {
  admin: new Set<Capability>(['roster.read', 'roster.write', 'board.read', 'alerts.read']),
  employee: new Set<Capability>(['alerts.read', 'archive.read.self', 'session.own']),
  auditor: new Set<Capability>(['archive.read.all']),
};

export function can(role: Role, capability: Capability): boolean {
  return GRANTS[role].has(capability);
}

/** Views shown in the navigation for a role. */
export function viewsFor(role: Role): string[] {
  switch (role) {
    case 'admin':
      return ['roster', 'board', 'alerts', 'archive'];
    case 'employee':
      return ['session', 'alerts', 'history'];
    case 'auditor':
      return ['archive'];
  }
}
