import { afterEach, beforeEach, describe, expect, it, vi } from "vitest";
import { DEFAULT_POLL_INTERVAL_MS, Poller } from "../src/poller.js";

describe("poller", () => {
  beforeEach(() => {
    vi.useFakeTimers();
  });

  afterEach(() => {
    vi.useRealTimers();
  });

  it("defaults to a five-second interval", () => {
    expect(DEFAULT_POLL_INTERVAL_MS).toBe(5000);
    const poller = new Poller(async () => 1, () => undefined);
    expect(poller.intervalMs).toBe(5000);
  });

  it("fetches immediately on start, then once per interval", async () => {
    const fetchOnce = vi.fn(async () => "tick");
    const updates: string[] = [];
    const poller = new Poller(fetchOnce, (value) => updates.push(value), { intervalMs: 1000 });

    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(fetchOnce).toHaveBeenCalledTimes(1);

    await vi.advanceTimersByTimeAsync(3000);
    expect(fetchOnce).toHaveBeenCalledTimes(4);
    expect(updates).toEqual(["tick", "tick", "tick", "tick"]);

    poller.stop();
  });

  it("never overlaps: ticks are skipped while a fetch is in flight", async () => {
    let release: (value: string) => void = () => undefined;
    const fetchOnce = vi.fn(
      () =>
        new Promise<string>((resolve) => {
          release = resolve;
        }),
    );
    const updates: string[] = [];
    const poller = new Poller(fetchOnce, (value) => updates.push(value), { intervalMs: 1000 });

    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(fetchOnce).toHaveBeenCalledTimes(1);

    // Three intervals pass while the first fetch is still pending.
    await vi.advanceTimersByTimeAsync(3000);
    expect(fetchOnce).toHaveBeenCalledTimes(1);
    expect(updates).toEqual([]);

    release("slow");
    await vi.advanceTimersByTimeAsync(0);
    expect(updates).toEqual(["slow"]);

    // The next interval resumes polling.
    const pending = vi.advanceTimersByTimeAsync(1000);
    release("next");
    await pending;
    expect(fetchOnce).toHaveBeenCalledTimes(2);

    poller.stop();
  });

  it("stop() halts polling and drops in-flight results", async () => {
    let release: (value: string) => void = () => undefined;
    const fetchOnce = vi.fn(
      () =>
        new Promise<string>((resolve) => {
          release = resolve;
        }),
    );
    const updates: string[] = [];
    const poller = new Poller(fetchOnce, (value) => updates.push(value), { intervalMs: 1000 });

    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    poller.stop();
    release("late");
    await vi.advanceTimersByTimeAsync(5000);

    expect(fetchOnce).toHaveBeenCalledTimes(1);
    expect(updates).toEqual([]); // a result arriving after stop() is not rendered
    expect(poller.running).toBe(false);
  });

  it("reports errors and keeps polling", async () => {
    let calls = 0;
    const fetchOnce = vi.fn(async () => {
      calls += 1;
      if (calls === 1) {
        throw new Error("boom");
      }
      return "recovered";
    });
    const errors: unknown[] = [];
    const updates: string[] = [];
    const poller = new Poller(fetchOnce, (value) => updates.push(value), {
      intervalMs: 1000,
      onError: (error) => errors.push(error),
    });

    poller.start();
    await vi.advanceTimersByTimeAsync(0);
    expect(errors).toHaveLength(1);

    await vi.advanceTimersByTimeAsync(1000);
    expect(updates).toEqual(["recovered"]);

    poller.stop();
  });

  it("start() is idempotent", async () => {
    const fetchOnce = vi.fn(async () => 1);
    const poller = new Poller(fetchOnce, () => undefined, { intervalMs: 1000 });

    poller.start();
    poller.start();
    await vi.advanceTimersByTimeAsync(0);

    expect(fetchOnce).toHaveBeenCalledTimes(1);
    poller.stop();
  });
});
