/**
 * Fixed-interval poller used by the timeline and the staff queue.
 *
 * The portal has no push channel; views refresh by polling (default every
 * 5 seconds).  Ticks never overlap: while one fetch is in flight, further
 * ticks are skipped rather than queued, so a slow server cannot pile up
 * requests.  Errors go to an optional handler and polling continues.
 */

export const DEFAULT_POLL_INTERVAL_MS = 5000;

export interface PollerOptions {
  intervalMs?: number;
  onError?: (error: unknown) => void;
}

export class Poller<T> {
  readonly intervalMs: number;

  private timer: ReturnType<typeof setInterval> | null = null;
  private inFlight = false;
  private readonly onError: (error: unknown) => void;

  constructor(
    private readonly fetchOnce: () => Promise<T>,
    private readonly onUpdate: (value: T) => void,
    options: PollerOptions = {},
  ) {
    this.intervalMs = options.intervalMs ?? DEFAULT_POLL_INTERVAL_MS;
    this.onError = options.onError ?? (() => undefined);
  }

  get running(): boolean {
    return this.timer !== null;
  }

  /** Begin polling: one immediate fetch, then one per interval. */
  start(): void {
    if (this.timer !== null) {
      return;
    }
    this.timer = setInterval(() => void this.tick(), this.intervalMs);
    void this.tick();
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }

  private async tick(): Promise<void> {
    if (this.inFlight) {
      return;
    }
    this.inFlight = true;
    try {
      const value = await this.fetchOnce();
      if (this.timer !== null) {
        this.onUpdate(value);
      }
    } catch (error) {
      this.onError(error);
    } finally {
      this.inFlight = false;
    }
  }
}
