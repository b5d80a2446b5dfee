// Dashboard bootstrap: token login, role discovery via /whoami, then
// role-appropriate views. All truth lives server-side; reloading the page
// rebuilds every board from API data alone.

import { ApiClient, ApiError } from './api.js';
import { AlertFeed } from './alerts.js';
import { ArchiveView } from './archive.js';
import { SessionBoard } from './board.js';
import { blobToBase64, openCamera, type CameraHandle } from './capture.js';
import { banner, clear, el, fmtTime } from './dom.js';
import { viewsFor } from './roles.js';
import { RosterView } from './roster.js';
import { SelfView } from './selfview.js';
import type { Role } from './types.js';

const root = document.getElementById('app') as HTMLElement;

function loginScreen(): void {
  clear(root);
  const input = el('input', { type: 'password', placeholder: 'API token', class: 'token-input' });
  const button = el('button', {}, ['Sign in']);
  const message = el('div', { class: 'login-message' });
  button.addEventListener('click', () => void signIn(input.value, message));
  input.addEventListener('keydown', (ev) => {
    if (ev.key === 'Enter') void signIn(input.value, message);
  });
  root.append(
    el('div', { class: 'login' }, [el('h1', {}, ['presenzia']), input, button, message]),
  );
}

async function signIn(token: string, message: HTMLElement): Promise<void> {
  try {
    const resp = await fetch('/whoami', { headers: { Authorization: `Bearer ${token}` } });
    if (!resp.ok) {
      message.textContent = resp.status === 403 ? 'Unknown token' : `Login failed (${resp.status})`;
      return;
    }
    const who = (await resp.json()) as { principal_id: string; role: Role };
    dashboard(new ApiClient(token), who.role, who.principal_id);
  } catch (err) {
    message.textContent = `Network error: ${err instanceof Error ? err.message : String(err)}`;
  }
}

function dashboard(api: ApiClient, role: Role, principalId: string): void {
  clear(root);
  const nav = el('nav', { class: 'nav' });
  const main = el('main', { class: 'main' });
  const title = el('header', { class: 'header' }, [
    el('strong', {}, ['presenzia']),
    el('span', { class: 'who' }, [`${principalId} (${role})`]),
  ]);
  root.append(title, nav, main);

  const views = viewsFor(role);
  const renderers: Record<string, () => void> = {
    roster: () => renderRoster(api, main),
    board: () => renderBoard(api, main),
    alerts: () => renderAlerts(api, main),
    archive: () => renderArchive(api, role, main),
    history: () => renderArchive(api, role, main),
    session: () => renderSelfView(api, main),
  };
  for (const view of views) {
    const button = el('button', { class: 'nav-item' }, [view]);
    button.addEventListener('click', () => renderers[view]?.());
    nav.append(button);
  }
  renderers[views[0] ?? 'alerts']?.();
}

function renderRoster(api: ApiClient, main: HTMLElement): void {
  clear(main);
  const table = el('table', { class: 'table' });
  const form = el('div', { class: 'form' });
  const status = el('div');
  const roster = new RosterView(api, (state) => {
    clear(table);
    clear(status);
    if (state.banner) status.append(banner('error', state.banner));
    if (state.issuedToken) {
      status.append(banner('info', `Employee token (save it now): ${state.issuedToken}`));
    }
    table.append(
      el('tr', {}, ['Id', 'Name', 'Contact', 'Active', ''].map((h) => el('th', {}, [h]))),
    );
    for (const emp of state.employees) {
      const remove = el('button', {}, ['Delete']);
      remove.addEventListener('click', () => void roster.remove(emp.employee_id));
      table.append(
        el('tr', {}, [
          el('td', {}, [emp.employee_id]),
          el('td', {}, [emp.name]),
          el('td', {}, [emp.contact]),
          el('td', {}, [emp.active ? 'yes' : 'no']),
          el('td', {}, [remove]),
        ]),
      );
    }
  });

  const idInput = el('input', { placeholder: 'employee id' });
  const nameInput = el('input', { placeholder: 'name' });
  const mailInput = el('input', { placeholder: 'email' });
  const video = el('video', { class: 'preview', autoplay: '', muted: '' });
  const shots: string[] = [];
  const shotCount = el('span', {}, ['0 captures']);
  let camera: CameraHandle | null = null;

  const openBtn = el('button', {}, ['Open camera']);
  openBtn.addEventListener('click', () => {
    void openCamera(video).then((handle) => {
      camera = handle;
    });
  });
  const snapBtn = el('button', {}, ['Capture enrollment still']);
  snapBtn.addEventListener('click', () => {
    if (!camera) return;
    void camera.captureStill().then(async (blob) => {
      shots.push(await blobToBase64(blob));
      shotCount.textContent = `${shots.length} captures`;
    });
  });
  const addBtn = el('button', {}, ['Add employee']);
  addBtn.addEventListener('click', () => {
    void roster
      .create({
        employee_id: idInput.value,
        name: nameInput.value,
        contact: mailInput.value,
        images: shots.splice(0),
      })
      .then(() => {
        shotCount.textContent = '0 captures';
      });
  });

  form.append(idInput, nameInput, mailInput, openBtn, video, snapBtn, shotCount, addBtn);
  main.append(el('h2', {}, ['Roster']), status, form, table);
  void roster.refresh();
}

function renderBoard(api: ApiClient, main: HTMLElement): void {
  clear(main);
  const table = el('table', { class: 'table' });
  const status = el('div');
  const board = new SessionBoard(api, (rows, error) => {
    clear(table);
    clear(status);
    if (error) status.append(banner('error', `Board refresh failed: ${error}`));
    table.append(
      el('tr', {}, ['Employee', 'Status', 'Last outcome', 'Miss run', 'Last check'].map(
        (h) => el('th', {}, [h]),
      )),
    );
    for (const row of rows) {
      table.append(
        el('tr', {}, [
          el('td', {}, [row.employeeName]),
          el('td', {}, [row.status]),
          el('td', {}, [row.lastOutcome ?? '-']),
          el('td', {}, [String(row.missRun)]),
          el('td', {}, [fmtTime(row.lastCheckAt)]),
        ]),
      );
    }
  });
  main.append(el('h2', {}, ['Live sessions']), status, table);
  board.start();
}

function renderAlerts(api: ApiClient, main: HTMLElement): void {
  clear(main);
  const list = el('ul', { class: 'alerts' });
  const feed = new AlertFeed(api, (items) => {
    clear(list);
    for (const item of items) {
      const ack = el('button', {}, [item.acknowledged ? 'acknowledged' : 'acknowledge']);
      if (!item.acknowledged) {
        ack.addEventListener('click', () => feed.acknowledge(item.alert.alert_id));
      }
      list.append(
        el('li', { class: item.acknowledged ? 'alert acked' : 'alert' }, [
          `${item.alert.employee_id}: ${item.alert.miss_run_length} consecutive misses at ` +
            `${fmtTime(item.alert.triggered_at)} `,
          ack,
        ]),
      );
    }
  });
  main.append(el('h2', {}, ['Alerts']), list);
  feed.start();
}

function renderArchive(api: ApiClient, role: Role, main: HTMLElement): void {
  clear(main);
  const container = el('div');
  const view = new ArchiveView(api, role, (state) => {
    clear(container);
    if (state.denied) {
      container.append(
        banner('denied', `Access denied: ${state.deniedMessage ?? 'archive is not admin-visible'}`),
      );
      return;
    }
    if (state.error) container.append(banner('error', state.error));
    const table = el('table', { class: 'table' });
    table.append(
      el('tr', {}, ['#', 'Employee', 'Outcome', 'At'].map((h) => el('th', {}, [h]))),
    );
    for (const record of state.records) {
      table.append(
        el('tr', {}, [
          el('td', {}, [String(record.seq)]),
          el('td', {}, [record.employee_name]),
          el('td', {}, [record.outcome]),
          el('td', {}, [fmtTime(record.at)]),
        ]),
      );
    }
    container.append(table);
  });
  main.append(el('h2', {}, ['Presence history']), container);
  void view.refresh();
}

function renderSelfView(api: ApiClient, main: HTMLElement): void {
  clear(main);
  const video = el('video', { class: 'preview', autoplay: '', muted: '' });
  const status = el('div');
  let camera: CameraHandle | null = null;

  const selfView = new SelfView(api, {
    capture: async () => {
      if (!camera) camera = await openCamera(video);
      return camera.captureStill();
    },
    onChange: (state) => {
      clear(status);
      if (state.error) status.append(banner('error', state.error));
      if (state.session) {
        const next = selfView.nextPromptInS();
        status.append(
          el('p', {}, [
            `Session ${state.session.status}; checks done ${state.session.checks_done}, ` +
              `miss run ${state.session.miss_run}. ` +
              (next !== null && state.session.status === 'active'
                ? `Next check in ~${Math.round(next)}s.`
                : ''),
          ]),
        );
        if (state.lastResult) {
          status.append(el('p', {}, [`Last check outcome: ${state.lastResult.outcome}`]));
        }
      }
    },
  });

  const startBtn = el('button', {}, ['Start session']);
  startBtn.addEventListener('click', () => void selfView.start());
  const endBtn = el('button', {}, ['End session']);
  endBtn.addEventListener('click', () => void selfView.end());

  main.append(el('h2', {}, ['My session']), startBtn, endBtn, video, status);
}

loginScreen();
