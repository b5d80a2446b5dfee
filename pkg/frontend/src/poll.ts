// Interval polling with two rules: at most one request in flight per
// poller, and exponential backoff after network failures.

export interface PollerOptions {
  intervalMs?: number;
  maxBackoffMs?: number;
  setTimeoutImpl?: typeof setTimeout;
  clearTimeoutImpl?: typeof clearTimeout;
}

export class Poller<T> {
  private timer: ReturnType<typeof setTimeout> | null = null;
  private inFlight = false;
  private stopped = true;
  private failures = 0;
  private readonly intervalMs: number;
  private readonly maxBackoffMs: number;
  private readonly setT: typeof setTimeout;
  private readonly clearT: typeof clearTimeout;

  constructor(
    private readonly fetchOnce: () => Promise<T>,
    private readonly onData: (data: T) => void,
    private readonly onError: (err: unknown) => void = () => {},
    options: PollerOptions = {},
  ) {
    this.intervalMs = options.intervalMs ?? 5000;
    this.maxBackoffMs = options.maxBackoffMs ?? 60_000;
    this.setT = options.setTimeoutImpl ?? ((fn, ms) => setTimeout(fn, ms));
    this.clearT = options.clearTimeoutImpl ?? ((t) => clearTimeout(t));
  }

  start(): void {
    if (!this.stopped) return;
    this.stopped = false;
    void this.tick();
  }

  stop(): void {
    this.stopped = true;
    if (this.timer !== null) {
      this.clearT(this.timer);
      this.timer = null;
    }
  }

  /** Poll immediately unless a request is already in flight (coalesced). */
  async tick(): Promise<void> {
    if (this.inFlight || this.stopped) return;
    this.inFlight = true;
    try {
      const data = await this.fetchOnce();
      this.failures = 0;
      this.onData(data);
    } catch (err) {
      this.failures += 1;
      this.onError(err);
    } finally {
      this.inFlight = false;
      this.schedule();
    }
  }

  private schedule(): void {
    if (this.stopped) return;
    const backoff = Math.min(this.intervalMs * 2 ** this.failures, this.maxBackoffMs);
    const delay = this.failures > 0 ? backoff : this.intervalMs;
    this.timer = this.setT(() => void this.tick(), delay);
  }
}
