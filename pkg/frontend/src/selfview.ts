// Employee self view: start/end the work session and answer scheduled
// check prompts by capturing a webcam still and posting it as a frame.

import type { ApiClient } from './api.js';
import type { FrameResult, Schedule, Session } from './types.js';

export interface SelfViewState {
  session: Session | null;
  schedule: Schedule | null;
  /** 0-based index of the next scheduled check not yet answered */
  nextCheckIndex: number;
  lastResult: FrameResult | null;
  error: string | null;
}

export interface SelfViewHooks {
  onChange?: (state: SelfViewState) => void;
  /** invoked when a scheduled check is due; must return one still frame */
  capture?: () => Promise<Blob>;
  now?: () => number; // epoch seconds
  setTimeoutImpl?: typeof setTimeout;
  clearTimeoutImpl?: typeof clearTimeout;
}

export class SelfView {
  state: SelfViewState = {
    session: null,
    schedule: null,
    nextCheckIndex: 0,
    lastResult: null,
    error: null,
  };
  private timer: ReturnType<typeof setTimeout> | null = null;
  private readonly now: () => number;
  private readonly setT: typeof setTimeout;
  private readonly clearT: typeof clearTimeout;

  constructor(
    private readonly api: ApiClient,
    private readonly hooks: SelfViewHooks = {},
  ) {
    this.now = hooks.now ?? (() => Date.now() / 1000);
    this.setT = hooks.setTimeoutImpl ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearT = hooks.clearTimeoutImpl ?? ((t) => clearTimeout(t));
  }

  private publish(): void {
    this.hooks.onChange?.(this.state);
  }

  async start(plannedDurationS = 8 * 3600): Promise<void> {
    try {
      const started = await this.api.startSession(plannedDurationS);
      this.state.session = started.session;
      this.state.schedule = started.schedule;
      this.state.nextCheckIndex = 0;
      this.state.error = null;
      this.armNextPrompt();
    } catch (err) {
      this.state.error = err instanceof Error ? err.message : String(err);
    }
    this.publish();
  }

  async end(): Promise<void> {
    if (!this.state.session) return;
    this.disarm();
    try {
      const out = await this.api.endSession(this.state.session.session_id);
      this.state.session = out.session;
      this.state.error = null;
    } catch (err) {
      this.state.error = err instanceof Error ? err.message : String(err);
    }
    this.publish();
  }

  /** Seconds until the next scheduled prompt, or null when none remain. */
  nextPromptInS(): number | null {
    const { schedule, nextCheckIndex } = this.state;
    if (!schedule) return null;
    const at = schedule.check_times[nextCheckIndex];
    if (at === undefined) return null;
    return Math.max(0, at - this.now());
  }

  private armNextPrompt(): void {
    this.disarm();
    const waitS = this.nextPromptInS();
    if (waitS === null) return;
    this.timer = this.setT(() => void this.runPrompt(), waitS * 1000);
  }

  private disarm(): void {
    if (this.timer !== null) {
      this.clearT(this.timer);
      this.timer = null;
    }
  }

  async runPrompt(): Promise<void> {
    const { session } = this.state;
    if (!session || !this.hooks.capture) return;
    try {
      const frame = await this.hooks.capture();
      this.state.lastResult = await this.api.submitFrame(session.session_id, frame);
      this.state.session = {
        ...session,
        miss_run: this.state.lastResult.miss_run,
        checks_done: this.state.lastResult.checks_done,
      };
      this.state.error = null;
    } catch (err) {
      this.state.error = err instanceof Error ? err.message : String(err);
    }
    this.state.nextCheckIndex += 1;
    this.armNextPrompt();
    this.publish();
  }
}
